//! Symbols: functions on the truncated space with exact derivatives and
//! claimed class norms.
//!
//! A claim is metadata supplied at construction time. The checks in
//! [`checks`] witness lower bounds for the corresponding norms by sampling;
//! they never infer a norm.

use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_dims, LabError, Result};
use crate::hilbert::{EpsilonSequence, HVector, OrthogonalMap, OrthonormalFrame, TraceClassOperator};

pub mod checks;
pub mod combinators;
pub mod cylindrical;
pub mod profile;

pub use checks::*;
pub use combinators::*;
pub use cylindrical::*;
pub use profile::*;

pub type SymbolRef = Arc<dyn Symbol>;

/// Claimed membership in `S_m(B, ε)` with norm `‖F‖_{m,ε}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmClaim {
    pub m: usize,
    pub frame: OrthonormalFrame,
    pub eps: EpsilonSequence,
    pub norm: f64,
}

/// Claimed membership in `S(Q_A)` with norm `‖f‖_{Q_A}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QaClaim {
    pub op: TraceClassOperator,
    pub norm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Claims {
    pub smeps: Option<SmClaim>,
    pub qa: Option<QaClaim>,
    /// Claimed bound on `sup |f|`.
    pub sup: Option<f64>,
}

impl Claims {
    pub fn none() -> Self {
        Claims::default()
    }

    /// Claims that survive a contraction such as `H_t`.
    pub fn contracted(&self) -> Self {
        self.clone()
    }
}

pub trait Symbol: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Complex64;

    /// `d^m f(x)(U_1, …, U_m)` with `m = dirs.len()`.
    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64>;

    /// Highest derivative order available (`usize::MAX` when unlimited).
    fn max_order(&self) -> usize {
        usize::MAX
    }

    /// Vectors spanning a subspace outside of which `f` is constant along
    /// every direction; `None` when unknown.
    fn support(&self) -> Option<Vec<HVector>>;

    fn claims(&self) -> Claims {
        Claims::none()
    }

    /// `H_t f` as a symbol, for families stable under the heat semigroup.
    fn heat_closed_form(&self, _t: f64) -> Option<SymbolRef> {
        None
    }

    /// `Δf` as a symbol, when a closed form in the same family exists.
    fn laplacian_closed_form(&self) -> Option<SymbolRef> {
        None
    }

    /// `f∘φ` in the same family, when available.
    fn compose_closed_form(&self, _phi: &OrthogonalMap) -> Option<SymbolRef> {
        None
    }

    /// False when derivatives are approximated.
    fn certified(&self) -> bool {
        true
    }

    fn label(&self) -> String;
}

pub fn check_order(f: &dyn Symbol, m: usize) -> Result<()> {
    if m > f.max_order() {
        Err(LabError::UnsupportedOrder { requested: m, available: f.max_order() })
    } else {
        Ok(())
    }
}

pub fn check_point(f: &dyn Symbol, x: &[f64], dirs: &[&[f64]]) -> Result<()> {
    check_dims(&f.label(), f.dim(), x.len())?;
    for d in dirs {
        check_dims(&f.label(), f.dim(), d.len())?;
    }
    check_order(f, dirs.len())
}

/// `∂^α f` for a multi-index `α` given as counts per frame index.
pub fn partial(f: SymbolRef, multi: &[usize]) -> Result<SymbolRef> {
    check_dims("partial", f.dim(), multi.len())?;
    let dim = f.dim();
    let dirs: Vec<HVector> = multi
        .iter()
        .enumerate()
        .flat_map(|(j, &n)| std::iter::repeat_n(HVector::basis(dim, j), n))
        .collect();
    directional(f, dirs)
}

/// `x ↦ d^m f(x)(U_1, …, U_m)` as a symbol.
pub fn directional(f: SymbolRef, dirs: Vec<HVector>) -> Result<SymbolRef> {
    for d in &dirs {
        check_dims("directional derivative", f.dim(), d.dim())?;
    }
    check_order(f.as_ref(), dirs.len())?;
    if dirs.is_empty() {
        return Ok(f);
    }
    Ok(Arc::new(DirectionalDerivativeSymbol::new(f, dirs)))
}

/// `Φ_k(x)(Y_1, …, Y_k)`, which at truncation is `d^k F(x)(Y_1, …, Y_k)`.
pub fn taylor_form(f: &dyn Symbol, x: &[f64], ys: &[HVector]) -> Result<Complex64> {
    let dirs: Vec<&[f64]> = ys.iter().map(|y| y.as_ref()).collect();
    check_point(f, x, &dirs)?;
    f.derivative(x, &dirs)
}

/// `Σ_j d²f(x)(b_j, b_j)` over the given orthonormal vectors.
pub fn laplacian_in_basis(f: &dyn Symbol, x: &[f64], basis: &[HVector]) -> Result<Complex64> {
    check_order(f, 2)?;
    let mut total = Complex64::new(0.0, 0.0);
    for b in basis {
        total += f.derivative(x, &[b, b])?;
    }
    Ok(total)
}

/// `Δf(x) = Tr d²f(x)`: closed form when the family has one, otherwise the
/// trace over an orthonormal basis of the support, otherwise over `frame`.
pub fn laplacian(f: &dyn Symbol, x: &[f64], frame: &OrthonormalFrame) -> Result<Complex64> {
    check_dims("laplacian", f.dim(), x.len())?;
    check_dims("laplacian", f.dim(), frame.dim())?;
    if let Some(l) = f.laplacian_closed_form() {
        return Ok(l.eval(x));
    }
    match f.support() {
        Some(s) => laplacian_in_basis(f, x, &crate::quadrature::orthonormal_support(&s)),
        None => {
            let basis: Vec<HVector> = (0..frame.dim()).map(|j| frame.vector(j)).collect();
            laplacian_in_basis(f, x, &basis)
        }
    }
}

/// `Δf` as a symbol: the family's closed form, else a trace over the
/// support basis (or the canonical frame).
pub fn laplacian_symbol(f: SymbolRef) -> Result<SymbolRef> {
    check_order(f.as_ref(), 2)?;
    if let Some(l) = f.laplacian_closed_form() {
        return Ok(l);
    }
    let basis = match f.support() {
        Some(s) => crate::quadrature::orthonormal_support(&s),
        None => (0..f.dim()).map(|j| HVector::basis(f.dim(), j)).collect(),
    };
    Ok(Arc::new(LaplacianSymbol::new(f, basis)))
}

/// `Δ^j f(x)`.
pub fn iterated_laplacian(f: SymbolRef, x: &[f64], j: usize) -> Result<Complex64> {
    check_dims("iterated_laplacian", f.dim(), x.len())?;
    let mut g = f;
    for _ in 0..j {
        g = laplacian_symbol(g)?;
    }
    Ok(g.eval(x))
}

/// `f∘φ`; exact for cylindrical symbols, whose directions map to `φ*a_i`.
pub fn compose_orthogonal(f: SymbolRef, phi: &OrthogonalMap) -> Result<SymbolRef> {
    check_dims("compose_orthogonal", f.dim(), phi.dim())?;
    if let Some(g) = f.compose_closed_form(phi) {
        return Ok(g);
    }
    Ok(Arc::new(ComposedSymbol::new(f, phi.clone())))
}

/// `x ↦ ⟨z, x⟩ F(x)`.
pub fn multiply_coordinate(f: SymbolRef, z: &HVector) -> Result<SymbolRef> {
    check_dims("multiply_coordinate", f.dim(), z.dim())?;
    if z.norm() == 0.0 {
        return Ok(Arc::new(CylindricalSymbol::constant(f.dim(), 0.0)));
    }
    let lin: SymbolRef = Arc::new(PolyScalarSymbol::new(vec![z.clone()], vec![1])?);
    Ok(Arc::new(ProductSymbol::new(vec![lin, f])?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn a2() -> HVector {
        HVector::new(vec![0.6, -0.8, 0.0]).unwrap()
    }

    #[test]
    fn taylor_form_examples() {
        let a = a2();
        let f = PolyScalarSymbol::new(vec![a.clone()], vec![2]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let y = HVector::new(vec![0.5, 0.1, -1.0]).unwrap();
        let v = taylor_form(&f, &x, std::slice::from_ref(&y)).unwrap();
        assert_abs_diff_eq!(v.re, 2.0 * a.dot(&x) * a.dot(&y), epsilon = 1e-14);
        let z = HVector::zeros(3);
        assert_eq!(taylor_form(&f, &x, std::slice::from_ref(&z)).unwrap().norm(), 0.0);
        let c = trig(a.clone(), 0.3, 1.0);
        let y2 = HVector::new(vec![-0.2, 0.4, 0.9]).unwrap();
        let p = taylor_form(&c, &x, &[y.clone(), y2.clone()]).unwrap();
        let q = taylor_form(&c, &x, &[y2, y]).unwrap();
        assert_abs_diff_eq!(p.re, q.re, epsilon = 1e-10);
    }

    #[test]
    fn laplacian_examples() {
        let a = a2();
        let frame = OrthonormalFrame::canonical(3).unwrap();
        let x = [0.4, 1.1, -0.3];
        let sq = PolyScalarSymbol::new(vec![a.clone()], vec![2]).unwrap();
        assert_abs_diff_eq!(laplacian(&sq, &x, &frame).unwrap().re, 2.0 * a.norm_sq(), epsilon = 1e-13);
        let c = trig(a.clone(), 0.0, 1.0);
        assert_abs_diff_eq!(
            laplacian(&c, &x, &frame).unwrap().re,
            -a.norm_sq() * a.dot(&x).cos(),
            epsilon = 1e-14
        );
        let lin = PolyScalarSymbol::new(vec![a.clone()], vec![1]).unwrap();
        assert_eq!(laplacian(&lin, &x, &frame).unwrap().re, 0.0);
    }

    #[test]
    fn iterated_laplacian_examples() {
        let a = HVector::new(vec![1.5, 0.5, 0.0]).unwrap();
        let x = [0.2, -0.7, 0.0];
        let c: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
        assert_eq!(iterated_laplacian(c.clone(), &x, 0).unwrap(), c.eval(&x));
        assert_abs_diff_eq!(
            iterated_laplacian(c, &x, 2).unwrap().re,
            a.norm_sq().powi(2) * a.dot(&x).cos(),
            epsilon = 1e-12
        );
        let sq: SymbolRef = Arc::new(PolyScalarSymbol::new(vec![a], vec![2]).unwrap());
        assert_eq!(iterated_laplacian(sq, &x, 2).unwrap().re, 0.0);
    }

    #[test]
    fn multiply_coordinate_examples() {
        let a = HVector::new(vec![1.0, 0.0]).unwrap();
        let f: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
        let g = multiply_coordinate(f.clone(), &a).unwrap();
        let x = [std::f64::consts::PI, 0.3];
        assert_abs_diff_eq!(g.eval(&x).re, -std::f64::consts::PI, epsilon = 1e-14);
        let zero = multiply_coordinate(f, &HVector::zeros(2)).unwrap();
        assert_eq!(zero.eval(&x).norm(), 0.0);
        let one: SymbolRef = Arc::new(CylindricalSymbol::constant(2, 1.0));
        let lin = multiply_coordinate(one, &a).unwrap();
        assert_eq!(lin.eval(&[2.5, 1.0]).re, 2.5);
    }

    #[test]
    fn partial_of_trig() {
        let a = HVector::new(vec![2.0, 3.0]).unwrap();
        let f: SymbolRef = Arc::new(trig(a, 0.0, 1.0));
        let d = partial(f, &[1, 1]).unwrap();
        let x = [0.1, 0.2];
        let s: f64 = 0.2 + 0.6;
        assert_abs_diff_eq!(d.eval(&x).re, -6.0 * s.cos(), epsilon = 1e-14);
    }
}
