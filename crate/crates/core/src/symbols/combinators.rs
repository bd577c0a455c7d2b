//! Symbol algebra: sums, products, derivatives, Laplacians, orthogonal
//! composition and user functions with finite-difference derivatives.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::cylindrical::{composed_claims, laplacian_claims};
use super::{check_point, directional, Claims, QaClaim, SmClaim, Symbol, SymbolRef};
use crate::error::{check_dims, invalid, Result};
use crate::hilbert::{HVector, OrthogonalMap};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn union_support(parts: &[SymbolRef]) -> Option<Vec<HVector>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p.support()?);
    }
    Some(out)
}

/// `Σ_i c_i f_i`.
#[derive(Clone, Debug)]
pub struct LinearCombinationSymbol {
    terms: Vec<(Complex64, SymbolRef)>,
}

impl LinearCombinationSymbol {
    pub fn new(terms: Vec<(Complex64, SymbolRef)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return invalid("linear combination needs at least one term");
        };
        let dim = first.dim();
        for (_, t) in &terms {
            check_dims("linear combination", dim, t.dim())?;
        }
        Ok(LinearCombinationSymbol { terms })
    }

    pub fn real(terms: Vec<(f64, SymbolRef)>) -> Result<Self> {
        Self::new(terms.into_iter().map(|(c, f)| (Complex64::new(c, 0.0), f)).collect())
    }

    fn map_terms(&self, g: impl Fn(&SymbolRef) -> Option<SymbolRef>) -> Option<SymbolRef> {
        let terms = self
            .terms
            .iter()
            .map(|(c, f)| g(f).map(|h| (*c, h)))
            .collect::<Option<Vec<_>>>()?;
        Some(Arc::new(LinearCombinationSymbol { terms }))
    }
}

impl Symbol for LinearCombinationSymbol {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|(c, f)| c * f.eval(x)).sum()
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let mut total = zero();
        for (c, f) in &self.terms {
            total += c * f.derivative(x, dirs)?;
        }
        Ok(total)
    }

    fn max_order(&self) -> usize {
        self.terms.iter().map(|(_, f)| f.max_order()).min().unwrap_or(usize::MAX)
    }

    fn support(&self) -> Option<Vec<HVector>> {
        let parts: Vec<SymbolRef> = self.terms.iter().map(|(_, f)| f.clone()).collect();
        union_support(&parts)
    }

    fn claims(&self) -> Claims {
        let all: Vec<Claims> = self.terms.iter().map(|(_, f)| f.claims()).collect();
        let weights: Vec<f64> = self.terms.iter().map(|(c, _)| c.norm()).collect();
        let sup = all
            .iter()
            .zip(&weights)
            .map(|(c, w)| c.sup.map(|s| w * s))
            .sum::<Option<f64>>();
        let qa = match all[0].qa.as_ref() {
            Some(q0) if all.iter().all(|c| c.qa.as_ref().is_some_and(|q| q.op == q0.op)) => {
                Some(QaClaim {
                    op: q0.op.clone(),
                    norm: all.iter().zip(&weights).map(|(c, w)| w * c.qa.as_ref().unwrap().norm).sum(),
                })
            }
            _ => None,
        };
        let smeps = match all[0].smeps.as_ref() {
            Some(s0)
                if all.iter().all(|c| {
                    c.smeps.as_ref().is_some_and(|s| s.m == s0.m && s.eps == s0.eps && s.frame == s0.frame)
                }) =>
            {
                Some(SmClaim {
                    norm: all.iter().zip(&weights).map(|(c, w)| w * c.smeps.as_ref().unwrap().norm).sum(),
                    ..s0.clone()
                })
            }
            _ => None,
        };
        Claims { smeps, qa, sup }
    }

    fn heat_closed_form(&self, t: f64) -> Option<SymbolRef> {
        self.map_terms(|f| f.heat_closed_form(t))
    }

    fn laplacian_closed_form(&self) -> Option<SymbolRef> {
        self.map_terms(|f| f.laplacian_closed_form())
    }

    fn compose_closed_form(&self, phi: &OrthogonalMap) -> Option<SymbolRef> {
        self.map_terms(|f| super::compose_orthogonal(f.clone(), phi).ok())
    }

    fn certified(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.certified())
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(c, f)| format!("({c})*{}", f.label())).collect();
        parts.join(" + ")
    }
}

/// `Π_i f_i`, differentiated by the Leibniz rule.
#[derive(Clone, Debug)]
pub struct ProductSymbol {
    factors: Vec<SymbolRef>,
}

impl ProductSymbol {
    pub fn new(factors: Vec<SymbolRef>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return invalid("product needs at least one factor");
        };
        let dim = first.dim();
        for f in &factors {
            check_dims("product", dim, f.dim())?;
        }
        Ok(ProductSymbol { factors })
    }

    pub fn factors(&self) -> &[SymbolRef] {
        &self.factors
    }
}

impl Symbol for ProductSymbol {
    fn dim(&self) -> usize {
        self.factors[0].dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.factors.iter().map(|f| f.eval(x)).product()
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let m = dirs.len();
        if m > 16 {
            return invalid("product derivatives are limited to order 16");
        }
        let full = (1usize << m) - 1;
        // dp[mask]: directions in mask distributed over the factors seen so far
        let mut dp = vec![zero(); full + 1];
        dp[0] = Complex64::new(1.0, 0.0);
        for f in &self.factors {
            let mut d = vec![zero(); full + 1];
            for (mask, slot) in d.iter_mut().enumerate() {
                let sub: Vec<&[f64]> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| dirs[i]).collect();
                *slot = f.derivative(x, &sub)?;
            }
            let mut next = vec![zero(); full + 1];
            for (mask, out) in next.iter_mut().enumerate() {
                let mut sub = mask;
                loop {
                    if dp[mask ^ sub] != zero() && d[sub] != zero() {
                        *out += dp[mask ^ sub] * d[sub];
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
            }
            dp = next;
        }
        Ok(dp[full])
    }

    fn max_order(&self) -> usize {
        self.factors.iter().map(|f| f.max_order()).min().unwrap_or(usize::MAX)
    }

    fn support(&self) -> Option<Vec<HVector>> {
        union_support(&self.factors)
    }

    /// `Π f_i ∈ S(Q_{n·ΣA_i})` with norm `Π ‖f_i‖_{Q_{A_i}}`.
    fn claims(&self) -> Claims {
        let all: Vec<Claims> = self.factors.iter().map(|f| f.claims()).collect();
        let sup = all.iter().map(|c| c.sup).product::<Option<f64>>();
        let qa = all
            .iter()
            .map(|c| c.qa.clone())
            .collect::<Option<Vec<QaClaim>>>()
            .and_then(|qs| {
                let mut op = qs[0].op.clone();
                for q in &qs[1..] {
                    op = op.sum(&q.op).ok()?;
                }
                Some(QaClaim {
                    op: op.scaled(qs.len() as f64).ok()?,
                    norm: qs.iter().map(|q| q.norm).product(),
                })
            });
        Claims { smeps: None, qa, sup }
    }

    fn compose_closed_form(&self, phi: &OrthogonalMap) -> Option<SymbolRef> {
        let factors = self
            .factors
            .iter()
            .map(|f| super::compose_orthogonal(f.clone(), phi).ok())
            .collect::<Option<Vec<_>>>()?;
        Some(Arc::new(ProductSymbol { factors }))
    }

    fn certified(&self) -> bool {
        self.factors.iter().all(|f| f.certified())
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|f| f.label()).collect();
        format!("prod({})", parts.join(", "))
    }
}

/// `x ↦ d^m f(x)(U_1, …, U_m)` for fixed `U_j`.
#[derive(Clone, Debug)]
pub struct DirectionalDerivativeSymbol {
    inner: SymbolRef,
    dirs: Vec<HVector>,
}

impl DirectionalDerivativeSymbol {
    pub(crate) fn new(inner: SymbolRef, dirs: Vec<HVector>) -> Self {
        DirectionalDerivativeSymbol { inner, dirs }
    }
}

impl Symbol for DirectionalDerivativeSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        let d: Vec<&[f64]> = self.dirs.iter().map(|v| v.as_ref()).collect();
        self.inner.derivative(x, &d).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let mut all: Vec<&[f64]> = self.dirs.iter().map(|v| v.as_ref()).collect();
        all.extend_from_slice(dirs);
        self.inner.derivative(x, &all)
    }

    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(self.dirs.len())
    }

    fn support(&self) -> Option<Vec<HVector>> {
        self.inner.support()
    }

    /// `|d^m(∂_U f)(V)| ≤ ‖f‖ Π Q_A(U_j)^{1/2} Π Q_A(V_i)^{1/2}`.
    fn claims(&self) -> Claims {
        let c = self.inner.claims();
        let qa = c.qa.map(|q| {
            let factor: f64 = self.dirs.iter().map(|u| q.op.q_form_slice(u).sqrt()).product();
            QaClaim { norm: q.norm * factor, op: q.op }
        });
        Claims { smeps: None, sup: qa.as_ref().map(|q| q.norm), qa }
    }

    fn heat_closed_form(&self, t: f64) -> Option<SymbolRef> {
        directional(self.inner.heat_closed_form(t)?, self.dirs.clone()).ok()
    }

    fn laplacian_closed_form(&self) -> Option<SymbolRef> {
        directional(self.inner.laplacian_closed_form()?, self.dirs.clone()).ok()
    }

    fn compose_closed_form(&self, phi: &OrthogonalMap) -> Option<SymbolRef> {
        let inner = super::compose_orthogonal(self.inner.clone(), phi).ok()?;
        directional(inner, self.dirs.iter().map(|u| phi.adjoint_apply_slice(u)).collect()).ok()
    }

    fn certified(&self) -> bool {
        self.inner.certified()
    }

    fn label(&self) -> String {
        format!("d{}({})", self.dirs.len(), self.inner.label())
    }
}

/// `x ↦ Σ_b d²f(x)(b, b)` over a fixed orthonormal family.
#[derive(Clone, Debug)]
pub struct LaplacianSymbol {
    inner: SymbolRef,
    basis: Vec<HVector>,
}

impl LaplacianSymbol {
    pub fn new(inner: SymbolRef, basis: Vec<HVector>) -> Self {
        LaplacianSymbol { inner, basis }
    }
}

impl Symbol for LaplacianSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.derivative(x, &[]).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let mut total = zero();
        let mut all: Vec<&[f64]> = Vec::with_capacity(dirs.len() + 2);
        for b in &self.basis {
            all.clear();
            all.push(b);
            all.push(b);
            all.extend_from_slice(dirs);
            total += self.inner.derivative(x, &all)?;
        }
        Ok(total)
    }

    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(2)
    }

    fn support(&self) -> Option<Vec<HVector>> {
        self.inner.support()
    }

    fn claims(&self) -> Claims {
        laplacian_claims(&self.inner.claims())
    }

    fn certified(&self) -> bool {
        self.inner.certified()
    }

    fn label(&self) -> String {
        format!("lap({})", self.inner.label())
    }
}

/// `f∘φ` for a general symbol.
#[derive(Clone, Debug)]
pub struct ComposedSymbol {
    inner: SymbolRef,
    phi: OrthogonalMap,
}

impl ComposedSymbol {
    pub fn new(inner: SymbolRef, phi: OrthogonalMap) -> Self {
        ComposedSymbol { inner, phi }
    }
}

impl Symbol for ComposedSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.inner.eval(&self.phi.apply_slice(x))
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let mapped: Vec<HVector> = dirs.iter().map(|u| self.phi.apply_slice(u)).collect();
        let refs: Vec<&[f64]> = mapped.iter().map(|v| v.as_ref()).collect();
        self.inner.derivative(&self.phi.apply_slice(x), &refs)
    }

    fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    fn support(&self) -> Option<Vec<HVector>> {
        Some(self.inner.support()?.iter().map(|a| self.phi.adjoint_apply_slice(a)).collect())
    }

    fn claims(&self) -> Claims {
        composed_claims(&self.inner.claims(), &self.phi)
    }

    fn certified(&self) -> bool {
        self.inner.certified()
    }

    fn label(&self) -> String {
        format!("({})∘phi", self.inner.label())
    }
}

pub type UserFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// An arbitrary function. Derivatives up to order 2 come from central
/// differences with one Richardson step and are flagged uncertified.
#[derive(Clone)]
pub struct FnSymbol {
    dim: usize,
    f: UserFn,
    label: String,
}

impl fmt::Debug for FnSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSymbol").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl FnSymbol {
    pub fn new(dim: usize, label: impl Into<String>, f: UserFn) -> Self {
        FnSymbol { dim, f, label: label.into() }
    }
}

/// Step used by the finite-difference fallbacks: `1e−4·(1 + |x|)`.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + crate::hilbert::norm(x))
}

/// `d^m g(x)(U_1, …, U_m)` for `m ≤ 2` by central differences with one
/// Richardson extrapolation level.
pub fn fd_derivative(g: &dyn Fn(&[f64]) -> Complex64, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
    let h = fd_step(x);
    let shifted = |coeffs: &[(f64, &[f64])]| -> Vec<f64> {
        let mut y = x.to_vec();
        for (c, u) in coeffs {
            for (yi, ui) in y.iter_mut().zip(u.iter()) {
                *yi += c * ui;
            }
        }
        y
    };
    let est = |h: f64| -> Complex64 {
        match dirs {
            [] => g(x),
            [u] => (g(&shifted(&[(h, u)])) - g(&shifted(&[(-h, u)]))) / (2.0 * h),
            [u, v] => {
                (g(&shifted(&[(h, u), (h, v)])) - g(&shifted(&[(h, u), (-h, v)]))
                    - g(&shifted(&[(-h, u), (h, v)]))
                    + g(&shifted(&[(-h, u), (-h, v)])))
                    / (4.0 * h * h)
            }
            _ => unreachable!("order checked by caller"),
        }
    };
    if dirs.len() > 2 {
        return Err(crate::error::LabError::UnsupportedOrder { requested: dirs.len(), available: 2 });
    }
    if dirs.is_empty() {
        return Ok(g(x));
    }
    // scale directions to unit length so the step is isotropic
    let norms: Vec<f64> = dirs.iter().map(|u| crate::hilbert::norm(u)).collect();
    if norms.contains(&0.0) {
        return Ok(zero());
    }
    let coarse = est(h);
    let fine = est(0.5 * h);
    Ok((4.0 * fine - coarse) / 3.0)
}

impl Symbol for FnSymbol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        (self.f)(x)
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        fd_derivative(&*self.f, x, dirs)
    }

    fn max_order(&self) -> usize {
        2
    }

    fn support(&self) -> Option<Vec<HVector>> {
        None
    }

    fn certified(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{trig, CylindricalSymbol};
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_leibniz_matches_expansion() {
        let a = HVector::new(vec![1.0, 0.5]).unwrap();
        let b = HVector::new(vec![-0.3, 0.8]).unwrap();
        let f: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
        let g: SymbolRef = Arc::new(trig(b.clone(), 0.4, 2.0));
        let p = ProductSymbol::new(vec![f.clone(), g.clone()]).unwrap();
        let x = [0.2, -0.9];
        let u = [0.7, 0.1];
        let v = [-0.4, 1.2];
        let lhs = p.derivative(&x, &[&u, &v]).unwrap();
        let rhs = f.derivative(&x, &[&u, &v]).unwrap() * g.eval(&x)
            + f.derivative(&x, &[&u]).unwrap() * g.derivative(&x, &[&v]).unwrap()
            + f.derivative(&x, &[&v]).unwrap() * g.derivative(&x, &[&u]).unwrap()
            + f.eval(&x) * g.derivative(&x, &[&u, &v]).unwrap();
        assert_abs_diff_eq!(lhs.re, rhs.re, epsilon = 1e-13);
    }

    #[test]
    fn fn_symbol_second_derivative() {
        let f = FnSymbol::new(2, "sin", Arc::new(|x: &[f64]| Complex64::new((x[0] + 2.0 * x[1]).sin(), 0.0)));
        let x = [0.3, 0.1];
        let d = f.derivative(&x, &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(d.re, -2.0 * 0.5f64.sin(), epsilon = 1e-7);
        assert!(!f.certified());
        let e: &[f64] = &[1.0, 0.0];
        assert!(f.derivative(&x, &[e, e, e]).is_err());
    }

    #[test]
    fn combination_claims_add() {
        let a = HVector::new(vec![1.0, 0.0]).unwrap();
        let f: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
        let g: SymbolRef = Arc::new(trig(a, 1.0, 2.0));
        let c = LinearCombinationSymbol::real(vec![(1.0, f), (-0.5, g)]).unwrap();
        assert_abs_diff_eq!(c.claims().qa.unwrap().norm, 2.0);
        let k: SymbolRef = Arc::new(CylindricalSymbol::constant(2, 3.0));
        let c2 = LinearCombinationSymbol::real(vec![(1.0, k)]).unwrap();
        assert_eq!(c2.claims().sup, Some(3.0));
    }
}
