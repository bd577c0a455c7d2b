//! The heat operator `H_t f(x) = E f(x + √t Z)` and residual checks for its
//! semigroup, commutation, generator, expansion, commutator, covariance and
//! derivative-exchange properties.
//!
//! `heat_apply` always integrates numerically: a tensor Gauss–Hermite rule
//! over an orthonormal basis of the symbol's support, or Monte Carlo over
//! the ambient space. Closed forms are used only where an operation needs
//! `H_s f` as a symbol.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, LabError, Result};
use crate::hilbert::{HVector, OrthogonalMap};
use crate::quadrature::{adaptive_tensor_expectation, orthonormal_support, tensor_expectation, MAX_GH_ORDER};
use crate::report::{fmt_num, CsvTable};
use crate::sampling::{gaussian_sample, GaussianMeasureSpec};
use crate::symbols::{
    check_point, compose_orthogonal, directional, fd_derivative, laplacian_symbol, multiply_coordinate, Claims,
    Symbol, SymbolRef,
};

/// Largest support dimension handled by quadrature.
pub const MAX_QUADRATURE_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatKind {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatMethod {
    pub kind: HeatKind,
    /// Points per axis; `0` selects order doubling until convergence.
    pub quadrature_order: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl HeatMethod {
    pub fn quadrature(order: usize) -> Self {
        HeatMethod { kind: HeatKind::Quadrature, quadrature_order: order, mc_samples: 0, seed: 0 }
    }

    pub fn adaptive() -> Self {
        Self::quadrature(0)
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        HeatMethod { kind: HeatKind::MonteCarlo, quadrature_order: 0, mc_samples: samples, seed }
    }

    fn nested_order(&self) -> usize {
        if self.quadrature_order == 0 {
            32
        } else {
            self.quadrature_order
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatResult {
    pub value: Complex64,
    /// Quadrature tail estimate or Monte Carlo standard error.
    pub error_estimate: f64,
    pub method: HeatMethod,
}

fn quadrature_basis(f: &dyn Symbol) -> Result<Vec<HVector>> {
    let support = f.support().ok_or_else(|| {
        LabError::InvalidArgument(format!("quadrature needs a symbol with known support, got {}", f.label()))
    })?;
    let basis = orthonormal_support(&support);
    if basis.len() > MAX_QUADRATURE_DIM {
        return Err(LabError::ResourceLimit(format!(
            "support of dimension {} exceeds the quadrature limit {MAX_QUADRATURE_DIM}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// `E g(x + √t Z)` for `Z` standard on the support of `f`.
fn heat_quadrature(
    f: &dyn Symbol,
    g: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    x: &[f64],
    t: f64,
    order: usize,
) -> Result<(Complex64, f64)> {
    let basis = quadrature_basis(f)?;
    let scale = t.sqrt();
    if order == 0 {
        let r = adaptive_tensor_expectation(&basis, scale, x, g, MAX_GH_ORDER, 1e-14)?;
        Ok((r.value, r.error))
    } else {
        let v = tensor_expectation(&basis, order, scale, x, g)?;
        let coarse = tensor_expectation(&basis, order.div_ceil(2), scale, x, g)?;
        Ok((v, (v - coarse).norm()))
    }
}

fn heat_generic(
    f: &dyn Symbol,
    g: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    x: &[f64],
    t: f64,
    method: &HeatMethod,
) -> Result<HeatResult> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be finite and nonnegative, got {t}"));
    }
    check_dims("heat_apply", f.dim(), x.len())?;
    if t == 0.0 {
        return Ok(HeatResult { value: g(x), error_estimate: 0.0, method: *method });
    }
    let (value, error_estimate) = match method.kind {
        HeatKind::Quadrature => heat_quadrature(f, g, x, t, method.quadrature_order)?,
        HeatKind::MonteCarlo => {
            let spec = GaussianMeasureSpec::new(f.dim(), t)?;
            let batch = gaussian_sample(spec, method.seed, method.mc_samples)?;
            let est = batch.means(2, |z, out| {
                let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
                let v = g(&y);
                out[0] = v.re;
                out[1] = v.im;
            })?;
            (Complex64::new(est[0].value, est[1].value), est[0].stderr.hypot(est[1].stderr))
        }
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(LabError::NumericalOverflow("heat integral is not finite".into()));
    }
    Ok(HeatResult { value, error_estimate, method: *method })
}

/// `H_t f(x) = ∫ f(x + y) dμ_t(y)`; `t = 0` returns `f(x)`.
pub fn heat_apply(f: &dyn Symbol, x: &[f64], t: f64, method: &HeatMethod) -> Result<HeatResult> {
    heat_generic(f, &|y| f.eval(y), x, t, method)
}

/// `H_t f` as a symbol: the family's closed form when it has one, else a
/// [`HeatSymbol`] evaluated by quadrature.
pub fn heat_symbol(f: SymbolRef, t: f64, method: &HeatMethod) -> Result<SymbolRef> {
    if !(t >= 0.0) {
        return invalid(format!("t must be nonnegative, got {t}"));
    }
    if t == 0.0 {
        return Ok(f);
    }
    if let Some(g) = f.heat_closed_form(t) {
        return Ok(g);
    }
    Ok(Arc::new(HeatSymbol::new(f, t, method.nested_order())?))
}

/// `H_t f` for a symbol without a closed form. Derivatives are taken under
/// the integral sign: `d^m(H_t f)(x)(U) = H_t(d^m f(·)(U))(x)`.
#[derive(Clone, Debug)]
pub struct HeatSymbol {
    inner: SymbolRef,
    t: f64,
    order: usize,
}

impl HeatSymbol {
    pub fn new(inner: SymbolRef, t: f64, order: usize) -> Result<Self> {
        quadrature_basis(inner.as_ref())?;
        if order == 0 {
            return invalid("nested quadrature needs a fixed order");
        }
        Ok(HeatSymbol { inner, t, order })
    }
}

impl Symbol for HeatSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.derivative(x, &[]).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let basis = quadrature_basis(self.inner.as_ref())?;
        let g = |y: &[f64]| self.inner.derivative(y, dirs).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        tensor_expectation(&basis, self.order, self.t.sqrt(), x, &g)
    }

    fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    fn support(&self) -> Option<Vec<HVector>> {
        self.inner.support()
    }

    fn claims(&self) -> Claims {
        self.inner.claims().contracted()
    }

    fn certified(&self) -> bool {
        self.inner.certified()
    }

    fn label(&self) -> String {
        format!("H_{}({})", self.t, self.inner.label())
    }
}

/// A residual together with the method error it should be judged against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub residual: f64,
    pub error: f64,
}

impl Residual {
    fn between(a: &HeatResult, b: &HeatResult) -> Self {
        Residual { residual: (a.value - b.value).norm(), error: a.error_estimate + b.error_estimate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub claimed: f64,
    pub worst: f64,
    pub violations: usize,
    pub pass: bool,
}

fn claimed_norm(f: &dyn Symbol) -> Result<f64> {
    let c = f.claims();
    c.qa
        .map(|q| q.norm)
        .or(c.smeps.map(|s| s.norm))
        .or(c.sup)
        .ok_or_else(|| LabError::InvalidArgument(format!("{} carries no class claim", f.label())))
}

/// `|H_t f(x)| ≤ ‖f‖` on every grid point, up to the method error.
pub fn contraction_check(f: &dyn Symbol, grid: &[Vec<f64>], t: f64, method: &HeatMethod) -> Result<ContractionReport> {
    let claimed = claimed_norm(f)?;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for x in grid {
        let r = heat_apply(f, x, t, method)?;
        let v = r.value.norm();
        worst = worst.max(v);
        if v > claimed + 3.0 * r.error_estimate + 1e-12 * (1.0 + claimed) {
            violations += 1;
        }
    }
    Ok(ContractionReport { claimed, worst, violations, pass: violations == 0 })
}

/// `|H_t(H_s f)(x) − H_{t+s} f(x)|`.
pub fn semigroup_residual(f: SymbolRef, x: &[f64], s: f64, t: f64, method: &HeatMethod) -> Result<Residual> {
    let inner = heat_symbol(f.clone(), s, method)?;
    let lhs = heat_apply(inner.as_ref(), x, t, method)?;
    let rhs = heat_apply(f.as_ref(), x, s + t, method)?;
    Ok(Residual::between(&lhs, &rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// `Δ(H_t f)(x)` over an orthonormal basis of the support.
fn laplacian_of_heat(f: SymbolRef, x: &[f64], t: f64, mode: DerivativeMode, method: &HeatMethod) -> Result<HeatResult> {
    let basis = quadrature_basis(f.as_ref())?;
    match mode {
        DerivativeMode::Analytic => {
            let h = heat_symbol(f, t, method)?;
            let mut total = Complex64::new(0.0, 0.0);
            for b in &basis {
                total += h.derivative(x, &[b, b])?;
            }
            Ok(HeatResult { value: total, error_estimate: 0.0, method: *method })
        }
        DerivativeMode::FiniteDifference => {
            let g = |y: &[f64]| heat_apply(f.as_ref(), y, t, method).map(|r| r.value).unwrap_or(Complex64::new(f64::NAN, 0.0));
            let mut total = Complex64::new(0.0, 0.0);
            for b in &basis {
                total += fd_derivative(&g, x, &[b, b])?;
            }
            Ok(HeatResult { value: total, error_estimate: 0.0, method: *method })
        }
    }
}

/// `|Δ(H_t f)(x) − H_t(Δ f)(x)|`.
pub fn commutation_residual(
    f: SymbolRef,
    x: &[f64],
    t: f64,
    mode: DerivativeMode,
    method: &HeatMethod,
) -> Result<Residual> {
    let lhs = laplacian_of_heat(f.clone(), x, t, mode, method)?;
    let lap = laplacian_symbol(f)?;
    let rhs = heat_apply(lap.as_ref(), x, t, method)?;
    Ok(Residual::between(&lhs, &rhs))
}

/// `|(H_{t+δ} f(x) − H_t f(x))/δ − ½ H_t(Δ f)(x)|`.
pub fn generator_residual(f: SymbolRef, x: &[f64], t: f64, delta: f64, method: &HeatMethod) -> Result<Residual> {
    if !(delta > 0.0) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    let a = heat_apply(f.as_ref(), x, t + delta, method)?;
    let b = heat_apply(f.as_ref(), x, t, method)?;
    let lap = laplacian_symbol(f)?;
    let c = heat_apply(lap.as_ref(), x, t, method)?;
    let value = (a.value - b.value) / delta - 0.5 * c.value;
    Ok(Residual {
        residual: value.norm(),
        error: (a.error_estimate + b.error_estimate) / delta + 0.5 * c.error_estimate,
    })
}

/// Least-squares slope of `ln y` against `ln x`, skipping nonpositive values.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub t: f64,
    pub residual: f64,
    pub method_error: f64,
    /// `t^{N+1}/(N+1)! · ‖(½Δ)^{N+1} f‖_{Q_A}`
    pub qa_bound: Option<f64>,
    /// `‖F‖_{m,ε} 2^{3k/2} t^{k/2} Γ((k+1)/2) (Σ_Γ ε_j)^k / (√π k!)`, `k = 2N+1`
    pub sm_bound: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub n: usize,
    pub rows: Vec<ExpansionRow>,
    /// Observed order: slope of `ln residual` against `ln t`.
    pub slope: Option<f64>,
}

impl ExpansionReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// `|H_t f(x) − Σ_{k≤N} t^k/k! (½Δ)^k f(x)|` over a grid of `t`, with the
/// remainder bounds available from the claims of `f`.
pub fn expansion_check(f: SymbolRef, x: &[f64], ts: &[f64], n: usize, method: &HeatMethod) -> Result<ExpansionReport> {
    if ts.is_empty() {
        return invalid("t grid must be nonempty");
    }
    let mut powers = vec![f.clone()];
    for _ in 0..=n {
        let next = laplacian_symbol(powers.last().unwrap().clone())?;
        powers.push(next);
    }
    let terms: Vec<Complex64> = powers[..=n].iter().map(|g| g.eval(x)).collect();
    let top_claim = powers[n + 1].claims().qa.map(|q| q.norm);
    let sm = f.claims().smeps.filter(|c| c.m >= 2 * n + 2);
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let h = heat_apply(f.as_ref(), x, t, method)?;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut coeff = 1.0;
        for (k, term) in terms.iter().enumerate() {
            if k > 0 {
                coeff *= 0.5 * t / k as f64;
            }
            sum += coeff * term;
        }
        let residual = (h.value - sum).norm();
        let fact: f64 = (1..=n + 1).map(|i| i as f64).product();
        let qa_bound = top_claim.map(|c| t.powi(n as i32 + 1) / fact * 0.5f64.powi(n as i32 + 1) * c);
        let sm_bound = sm.as_ref().map(|c| {
            let k = (2 * n + 1) as f64;
            let kfact: f64 = (1..=2 * n + 1).map(|i| i as f64).product();
            c.norm * 2f64.powf(1.5 * k) * t.powf(k / 2.0) * libm::tgamma((k + 1.0) / 2.0)
                * c.eps.gamma_sum(&c.frame).powf(k)
                / (std::f64::consts::PI.sqrt() * kfact)
        });
        let slack = 3.0 * h.error_estimate + 1e-14;
        let pass = qa_bound.is_none_or(|b| residual <= b + slack) && sm_bound.is_none_or(|b| residual <= b + slack);
        rows.push(ExpansionRow { t, residual, method_error: h.error_estimate, qa_bound, sm_bound, pass });
    }
    let slope = loglog_slope(ts, &rows.iter().map(|r| r.residual).collect::<Vec<_>>());
    Ok(ExpansionReport { n, rows, slope })
}

/// `|(1/t)(H_t(M_u F)(x) − ⟨u, x⟩ H_t F(x)) − H_t(∂_u F)(x)|`.
///
/// With Monte Carlo all three integrals use the same samples and the
/// residual is the mean of one combined statistic.
pub fn multiplication_commutator_residual(
    f: SymbolRef,
    x: &[f64],
    t: f64,
    u: &HVector,
    method: &HeatMethod,
) -> Result<Residual> {
    if !(t > 0.0) {
        return invalid(format!("t must be positive, got {t}"));
    }
    check_dims("multiplication_commutator", f.dim(), u.dim())?;
    check_dims("multiplication_commutator", f.dim(), x.len())?;
    let du = directional(f.clone(), vec![u.clone()])?;
    let ux = u.dot(x);
    match method.kind {
        HeatKind::Quadrature => {
            let mf = multiply_coordinate(f.clone(), u)?;
            let a = heat_apply(mf.as_ref(), x, t, method)?;
            let b = heat_apply(f.as_ref(), x, t, method)?;
            let c = heat_apply(du.as_ref(), x, t, method)?;
            let value = (a.value - ux * b.value) / t - c.value;
            Ok(Residual {
                residual: value.norm(),
                error: (a.error_estimate + ux.abs() * b.error_estimate) / t + c.error_estimate,
            })
        }
        HeatKind::MonteCarlo => {
            let spec = GaussianMeasureSpec::new(f.dim(), t)?;
            let batch = gaussian_sample(spec, method.seed, method.mc_samples)?;
            let est = batch.means(2, |z, out| {
                let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
                let v = u.dot(z) / t * f.eval(&y) - du.eval(&y);
                out[0] = v.re;
                out[1] = v.im;
            })?;
            Ok(Residual {
                residual: Complex64::new(est[0].value, est[1].value).norm(),
                error: est[0].stderr.hypot(est[1].stderr),
            })
        }
    }
}

/// `|(H_t f)(φx) − H_t(f∘φ)(x)|`.
pub fn covariance_residual(f: SymbolRef, phi: &OrthogonalMap, x: &[f64], t: f64, method: &HeatMethod) -> Result<Residual> {
    check_dims("covariance_residual", f.dim(), x.len())?;
    let phix = phi.apply(&HVector::new(x.to_vec())?)?;
    let lhs = heat_apply(f.as_ref(), &phix, t, method)?;
    let g = compose_orthogonal(f, phi)?;
    let rhs = heat_apply(g.as_ref(), x, t, method)?;
    Ok(Residual::between(&lhs, &rhs))
}

/// `|d^m(H_t F)(x)(U) − H_t(d^m F(·)(U))(x)|`, the left side from the closed
/// form of `H_t F` or by differentiating under the integral sign.
pub fn directional_exchange_residual(
    f: SymbolRef,
    x: &[f64],
    t: f64,
    dirs: &[HVector],
    method: &HeatMethod,
) -> Result<Residual> {
    let h = heat_symbol(f.clone(), t, method)?;
    let refs: Vec<&[f64]> = dirs.iter().map(|d| d.as_ref()).collect();
    let lhs = h.derivative(x, &refs)?;
    let g = directional(f, dirs.to_vec())?;
    let rhs = heat_apply(g.as_ref(), x, t, method)?;
    Ok(Residual { residual: (lhs - rhs.value).norm(), error: rhs.error_estimate })
}

/// [`directional_exchange_residual`] for `∂^α` along the canonical frame,
/// `α` of depth at most one.
pub fn derivative_exchange_residual(
    f: SymbolRef,
    x: &[f64],
    t: f64,
    multi: &[usize],
    method: &HeatMethod,
) -> Result<Residual> {
    check_dims("derivative_exchange", f.dim(), multi.len())?;
    if multi.iter().any(|&a| a > 1) {
        return invalid("multi-index must have depth at most one");
    }
    let dirs: Vec<HVector> = multi
        .iter()
        .enumerate()
        .filter(|(_, &a)| a == 1)
        .map(|(j, _)| HVector::basis(f.dim(), j))
        .collect();
    directional_exchange_residual(f, x, t, &dirs, method)
}

/// One row of a heat experiment table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRow {
    pub experiment: String,
    pub symbol: String,
    pub t: f64,
    pub s: f64,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn heat_rows_csv(rows: &[HeatRow]) -> String {
    let mut table = CsvTable::new(&["experiment", "symbol", "t", "s", "residual", "bound", "pass"]);
    for r in rows {
        table.push(vec![
            r.experiment.clone(),
            r.symbol.clone(),
            fmt_num(r.t),
            fmt_num(r.s),
            fmt_num(r.residual),
            fmt_num(r.bound),
            r.pass.to_string(),
        ]);
    }
    table.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{random_orthogonal, TraceClassOperator};
    use crate::symbols::{gaussian_bell, trig, PolyScalarSymbol, ProductSymbol};
    use approx::assert_abs_diff_eq;

    fn a3() -> HVector {
        HVector::new(vec![0.6, -0.3, 0.9]).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let a = a3();
        let x = [0.2, 0.5, -1.0];
        let m = HeatMethod::adaptive();
        let f = trig(a.clone(), 0.0, 1.0);
        assert_eq!(heat_apply(&f, &x, 0.0, &m).unwrap().value, f.eval(&x));
        let r = heat_apply(&f, &x, 1.0, &m).unwrap();
        assert_abs_diff_eq!(r.value.re, (-0.5 * a.norm_sq()).exp() * a.dot(&x).cos(), epsilon = 1e-14);
        let sq = PolyScalarSymbol::new(vec![a.clone()], vec![2]).unwrap();
        let r = heat_apply(&sq, &x, 0.7, &m).unwrap();
        assert_abs_diff_eq!(r.value.re, a.dot(&x).powi(2) + 0.7 * a.norm_sq(), epsilon = 1e-13);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let f = trig(a3(), 0.4, 1.0);
        let x = [0.1, 0.1, 0.1];
        let q = heat_apply(&f, &x, 0.5, &HeatMethod::adaptive()).unwrap();
        let mc = heat_apply(&f, &x, 0.5, &HeatMethod::monte_carlo(100_000, 3)).unwrap();
        assert!((q.value - mc.value).norm() <= 3.0 * mc.error_estimate);
    }

    #[test]
    fn nested_semigroup_on_product() {
        let f: SymbolRef = Arc::new(
            ProductSymbol::new(vec![
                Arc::new(trig(HVector::new(vec![1.0, 0.0, 0.0]).unwrap(), 0.0, 1.0)),
                Arc::new(trig(HVector::new(vec![0.5, 0.5, 0.0]).unwrap(), 0.3, 1.0)),
            ])
            .unwrap(),
        );
        let r = semigroup_residual(f, &[0.3, -0.2, 0.4], 0.1, 0.5, &HeatMethod::quadrature(32)).unwrap();
        assert!(r.residual < 1e-12, "{r:?}");
    }

    #[test]
    fn commutation_both_modes() {
        let c = TraceClassOperator::from_symmetric(3, &[1.0, 0.3, 0.0, 0.3, 0.6, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let bell: SymbolRef = Arc::new(gaussian_bell(&c, 1.0));
        let x = [0.4, -0.2, 0.7];
        let m = HeatMethod::adaptive();
        assert!(commutation_residual(bell.clone(), &x, 0.5, DerivativeMode::Analytic, &m).unwrap().residual < 1e-10);
        assert!(commutation_residual(bell, &x, 0.5, DerivativeMode::FiniteDifference, &m).unwrap().residual < 1e-6);
    }

    #[test]
    fn generator_is_first_order() {
        let f: SymbolRef = Arc::new(trig(HVector::basis(2, 0), 0.0, 1.0));
        let m = HeatMethod::adaptive();
        let r1 = generator_residual(f.clone(), &[0.0, 0.0], 0.0, 1e-2, &m).unwrap().residual;
        let r2 = generator_residual(f, &[0.0, 0.0], 0.0, 5e-3, &m).unwrap().residual;
        assert_abs_diff_eq!(r1 / r2, 2.0, epsilon = 0.02);
    }

    #[test]
    fn expansion_order_and_bound() {
        let f: SymbolRef = Arc::new(trig(HVector::basis(2, 0), 0.0, 1.0));
        let ts = [0.01, 0.02, 0.05, 0.1, 0.2];
        let r = expansion_check(f, &[0.3, 0.0], &ts, 3, &HeatMethod::adaptive()).unwrap();
        assert!(r.pass(), "{r:?}");
        let s = r.slope.unwrap();
        assert!((3.8..=4.2).contains(&s), "{s}");
    }

    #[test]
    fn commutator_and_covariance() {
        let a = HVector::basis(3, 1);
        let f: SymbolRef = Arc::new(trig(a.clone(), 0.2, 1.0));
        let x = [0.5, 0.7, -0.1];
        let r = multiplication_commutator_residual(f.clone(), &x, 0.3, &a, &HeatMethod::adaptive()).unwrap();
        assert!(r.residual < 1e-12, "{r:?}");
        let r = multiplication_commutator_residual(f.clone(), &x, 0.3, &a, &HeatMethod::monte_carlo(50_000, 1)).unwrap();
        assert!(r.residual <= 3.0 * r.error, "{r:?}");
        let phi = random_orthogonal(3, 11).unwrap();
        assert!(covariance_residual(f, &phi, &x, 0.4, &HeatMethod::adaptive()).unwrap().residual < 1e-12);
    }

    #[test]
    fn exchange_under_integral() {
        let f: SymbolRef = Arc::new(trig(a3(), 0.0, 1.0));
        let r = derivative_exchange_residual(f, &[0.1, 0.2, 0.3], 0.5, &[1, 0, 1], &HeatMethod::adaptive()).unwrap();
        assert!(r.residual < 1e-12);
    }
}
