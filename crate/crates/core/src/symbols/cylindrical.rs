//! Cylindrical symbols `F(x) = g(⟨a_1,x⟩, …, ⟨a_k,x⟩)` and the stock families.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::profile::{BellProfile, Gram, LaplacianProfile, PolynomialProfile, Profile, TrigKind, TrigProfile};
use super::{check_point, Claims, QaClaim, SmClaim, Symbol, SymbolRef};
use crate::error::{check_dims, invalid, LabError, Result};
use crate::hilbert::{dot, EpsilonSequence, HVector, OrthogonalMap, OrthonormalFrame, TraceClassOperator};

#[derive(Clone, Debug)]
pub struct CylindricalSymbol {
    dim: usize,
    profile: Arc<dyn Profile>,
    dirs: Vec<HVector>,
    gram: Gram,
    claims: Claims,
    // amplitude of a stock trigonometric symbol
    trig_amplitude: Option<f64>,
}

impl CylindricalSymbol {
    pub fn new(dim: usize, profile: Arc<dyn Profile>, dirs: Vec<HVector>) -> Result<Self> {
        if profile.arity() != dirs.len() {
            return invalid(format!(
                "profile takes {} arguments but {} directions were given",
                profile.arity(),
                dirs.len()
            ));
        }
        for d in &dirs {
            check_dims("cylindrical direction", dim, d.dim())?;
        }
        let gram = dirs.iter().map(|a| dirs.iter().map(|b| dot(a, b)).collect()).collect();
        Ok(CylindricalSymbol { dim, profile, dirs, gram, claims: Claims::none(), trig_amplitude: None })
    }

    pub fn with_claims(mut self, claims: Claims) -> Self {
        self.claims = claims;
        self
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        CylindricalSymbol::new(dim, Arc::new(PolynomialProfile::constant(c)), Vec::new())
            .expect("constant profile has no directions")
            .with_claims(Claims { sup: Some(c.abs()), ..Claims::none() })
    }

    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }

    pub fn directions(&self) -> &[HVector] {
        &self.dirs
    }

    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    fn slots(&self, x: &[f64]) -> Vec<f64> {
        self.dirs.iter().map(|a| dot(a, x)).collect()
    }

    fn same_dirs(&self, profile: Arc<dyn Profile>, claims: Claims) -> CylindricalSymbol {
        CylindricalSymbol {
            dim: self.dim,
            profile,
            dirs: self.dirs.clone(),
            gram: self.gram.clone(),
            claims,
            trig_amplitude: None,
        }
    }

    /// Replaces the `S(Q_A)` claim by one with operator `op`, valid for
    /// single-direction trigonometric profiles: `‖f‖_{Q_A} = |c|` whenever
    /// `⟨A⁻¹a, a⟩ ≤ 1` on the range of `A`.
    pub fn with_trig_operator(mut self, op: &TraceClassOperator) -> Result<Self> {
        let amp = trig_amplitude(&self)?;
        let kappa = range_norm(&self.dirs[0], op).ok_or_else(|| {
            LabError::InvalidArgument("direction does not lie in the range of the operator".into())
        })?;
        if kappa > 1.0 + 1e-12 {
            return invalid(format!(
                "⟨A⁻¹a, a⟩^(1/2) = {kappa} exceeds 1; the symbol is not in S(Q_A) with this operator"
            ));
        }
        self.claims.qa = Some(QaClaim { op: op.clone(), norm: amp });
        Ok(self)
    }

    /// Adds the `S_m(B, ε)` claim `|c| Π_i max(1, |a_i|/ε_i)^m` for a
    /// single-direction trigonometric profile.
    pub fn with_trig_sm_claim(mut self, m: usize, frame: &OrthonormalFrame, eps: &EpsilonSequence) -> Result<Self> {
        let amp = trig_amplitude(&self)?;
        check_dims("S_m claim", self.dim, frame.dim())?;
        check_dims("S_m claim", self.dim, eps.len())?;
        let a = &self.dirs[0];
        let mut norm = amp;
        for i in 0..self.dim {
            let ai = a[i].abs();
            if ai == 0.0 {
                continue;
            }
            let e = eps.get(i);
            if e == 0.0 {
                return invalid(format!("ε_{i} = 0 but the direction has a component there"));
            }
            norm *= (ai / e).max(1.0).powi(m as i32);
        }
        self.claims.smeps = Some(SmClaim { m, frame: frame.clone(), eps: eps.clone(), norm });
        Ok(self)
    }
}

fn trig_amplitude(s: &CylindricalSymbol) -> Result<f64> {
    s.trig_amplitude
        .map(f64::abs)
        .ok_or_else(|| LabError::InvalidArgument("claim helpers need a stock trigonometric symbol".into()))
}

/// `⟨A⁻¹a, a⟩^{1/2}` when `a` lies in the range of `A`.
pub fn range_norm(a: &HVector, op: &TraceClassOperator) -> Option<f64> {
    let mut inside = 0.0;
    let mut kappa2 = 0.0;
    for (l, u) in op.eigenvalues().iter().zip(op.eigenvectors()) {
        let c = u.dot(a);
        inside += c * c;
        kappa2 += c * c / l;
    }
    let total = a.norm_sq();
    if total - inside > 1e-12 * total.max(f64::MIN_POSITIVE) {
        None
    } else {
        Some(kappa2.sqrt())
    }
}

impl Symbol for CylindricalSymbol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.profile.value(&self.slots(x))
    }

    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        check_point(self, x, dirs)?;
        let s = self.slots(x);
        let k = self.dirs.len();
        let m = dirs.len();
        if m == 0 {
            return Ok(self.profile.value(&s));
        }
        if k == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let coef: Vec<Vec<f64>> = dirs
            .iter()
            .map(|u| self.dirs.iter().map(|a| dot(a, u)).collect())
            .collect();
        let mut memo: HashMap<Vec<usize>, Complex64> = HashMap::new();
        let mut counts = vec![0usize; k];
        let mut total = Complex64::new(0.0, 0.0);
        chain(&*self.profile, &s, &coef, 0, 1.0, &mut counts, &mut memo, &mut total);
        Ok(total)
    }

    fn max_order(&self) -> usize {
        self.profile.max_order()
    }

    fn support(&self) -> Option<Vec<HVector>> {
        Some(self.dirs.clone())
    }

    fn claims(&self) -> Claims {
        self.claims.clone()
    }

    fn heat_closed_form(&self, t: f64) -> Option<SymbolRef> {
        let p = self.profile.heat(t, &self.gram)?;
        Some(Arc::new(self.same_dirs(p, self.claims.contracted())))
    }

    fn laplacian_closed_form(&self) -> Option<SymbolRef> {
        if self.profile.max_order() < 2 {
            return None;
        }
        let p = self.profile.laplacian(&self.gram).unwrap_or_else(|| {
            Arc::new(LaplacianProfile { inner: self.profile.clone(), gram: self.gram.clone() })
        });
        Some(Arc::new(self.same_dirs(p, laplacian_claims(&self.claims))))
    }

    fn compose_closed_form(&self, phi: &OrthogonalMap) -> Option<SymbolRef> {
        let dirs: Vec<HVector> = self.dirs.iter().map(|a| phi.adjoint_apply_slice(a)).collect();
        let claims = composed_claims(&self.claims, phi);
        let s = CylindricalSymbol::new(self.dim, self.profile.clone(), dirs).ok()?;
        Some(Arc::new(s.with_claims(claims)))
    }

    fn label(&self) -> String {
        format!("cyl[{}; k={}]", self.profile.label(), self.dirs.len())
    }
}

#[allow(clippy::too_many_arguments)]
fn chain(
    profile: &dyn Profile,
    s: &[f64],
    coef: &[Vec<f64>],
    i: usize,
    weight: f64,
    counts: &mut Vec<usize>,
    memo: &mut HashMap<Vec<usize>, Complex64>,
    total: &mut Complex64,
) {
    if i == coef.len() {
        let d = *memo.entry(counts.clone()).or_insert_with(|| profile.partial(s, counts));
        *total += weight * d;
        return;
    }
    for (r, &c) in coef[i].iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        counts[r] += 1;
        chain(profile, s, coef, i + 1, weight * c, counts, memo, total);
        counts[r] -= 1;
    }
}

/// `‖Δf‖_{Q_A} ≤ Tr(A) ‖f‖_{Q_A}`.
pub(crate) fn laplacian_claims(c: &Claims) -> Claims {
    let qa = c.qa.as_ref().map(|q| QaClaim { op: q.op.clone(), norm: q.op.trace() * q.norm });
    Claims { smeps: None, sup: qa.as_ref().map(|q| q.norm), qa }
}

pub(crate) fn composed_claims(c: &Claims, phi: &OrthogonalMap) -> Claims {
    Claims {
        smeps: None,
        qa: c
            .qa
            .as_ref()
            .and_then(|q| Some(QaClaim { op: q.op.conjugate(phi).ok()?, norm: q.norm })),
        sup: c.sup,
    }
}

/// `Π_i ⟨a_i, x⟩^{α_i}`. Unbounded, so it carries no class claim.
#[derive(Clone, Debug)]
pub struct PolyScalarSymbol {
    inner: CylindricalSymbol,
    exps: Vec<u32>,
}

impl PolyScalarSymbol {
    pub fn new(dirs: Vec<HVector>, exps: Vec<u32>) -> Result<Self> {
        if dirs.is_empty() || dirs.len() != exps.len() {
            return invalid("need one positive exponent per direction");
        }
        if exps.contains(&0) {
            return invalid("exponents must be positive");
        }
        let dim = dirs[0].dim();
        let inner =
            CylindricalSymbol::new(dim, Arc::new(PolynomialProfile::monomial(exps.clone())), dirs)?;
        Ok(PolyScalarSymbol { inner, exps })
    }

    pub fn directions(&self) -> &[HVector] {
        self.inner.directions()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn total_degree(&self) -> u32 {
        self.exps.iter().sum()
    }
}

impl Symbol for PolyScalarSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64]) -> Complex64 {
        self.inner.eval(x)
    }
    fn derivative(&self, x: &[f64], dirs: &[&[f64]]) -> Result<Complex64> {
        self.inner.derivative(x, dirs)
    }
    fn support(&self) -> Option<Vec<HVector>> {
        self.inner.support()
    }
    fn heat_closed_form(&self, t: f64) -> Option<SymbolRef> {
        self.inner.heat_closed_form(t)
    }
    fn laplacian_closed_form(&self) -> Option<SymbolRef> {
        self.inner.laplacian_closed_form()
    }
    fn compose_closed_form(&self, phi: &OrthogonalMap) -> Option<SymbolRef> {
        self.inner.compose_closed_form(phi)
    }
    fn label(&self) -> String {
        format!("polyscalar{:?}", self.exps)
    }
}

/// `c·cos(⟨a,x⟩ + θ)`, claimed in `S(Q_{aaᵀ})` with norm `|c|`.
pub fn trig(a: HVector, phase: f64, amplitude: f64) -> CylindricalSymbol {
    trig_family(a, TrigKind::Cos, phase, amplitude)
}

/// `c·e^{i⟨a,x⟩}`, claimed in `S(Q_{aaᵀ})` with norm `|c|`.
pub fn exp_i(a: HVector, amplitude: f64) -> CylindricalSymbol {
    trig_family(a, TrigKind::ExpI, 0.0, amplitude)
}

fn trig_family(a: HVector, kind: TrigKind, phase: f64, amplitude: f64) -> CylindricalSymbol {
    let dim = a.dim();
    let qa = (a.norm() > 0.0).then(|| QaClaim {
        op: TraceClassOperator::rank_one(&a),
        norm: amplitude.abs(),
    });
    let mut s = CylindricalSymbol::new(dim, Arc::new(TrigProfile { kind, amplitude, phase }), vec![a])
        .expect("one direction for a one-slot profile")
        .with_claims(Claims { smeps: None, qa, sup: Some(amplitude.abs()) });
    s.trig_amplitude = Some(amplitude);
    s
}

/// `A·e^{−Q_C(x)/2}` built on the eigenvectors of `C`.
pub fn gaussian_bell(c: &TraceClassOperator, amplitude: f64) -> CylindricalSymbol {
    CylindricalSymbol::new(
        c.dim(),
        Arc::new(BellProfile { amplitude, curvatures: c.eigenvalues().to_vec() }),
        c.eigenvectors().to_vec(),
    )
    .expect("eigenpairs match")
    .with_claims(Claims { sup: Some(amplitude.abs()), ..Claims::none() })
}

/// `⟨a, x⟩`.
pub fn linear(a: HVector) -> PolyScalarSymbol {
    PolyScalarSymbol::new(vec![a], vec![1]).expect("single positive exponent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::random_orthogonal;
    use approx::assert_abs_diff_eq;

    fn fd_dir(f: &dyn Symbol, x: &[f64], u: &[f64], inner: &[&[f64]]) -> f64 {
        let h = 1e-5;
        let xp: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - h * b).collect();
        (f.derivative(&xp, inner).unwrap().re - f.derivative(&xm, inner).unwrap().re) / (2.0 * h)
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let c = TraceClassOperator::from_symmetric(3, &[1.0, 0.2, 0.0, 0.2, 0.5, 0.1, 0.0, 0.1, 0.3])
            .unwrap();
        let bell = gaussian_bell(&c, 2.0);
        let poly = PolyScalarSymbol::new(
            vec![HVector::new(vec![1.0, -0.5, 0.2]).unwrap(), HVector::new(vec![0.0, 1.0, 1.0]).unwrap()],
            vec![2, 3],
        )
        .unwrap();
        let x = [0.3, -0.4, 0.8];
        let u = [0.5, 0.1, -0.7];
        let v = [-0.2, 0.9, 0.3];
        for f in [&bell as &dyn Symbol, &poly] {
            let an = f.derivative(&x, &[&u, &v]).unwrap().re;
            let fd = fd_dir(f, &x, &u, &[&v]);
            assert!((an - fd).abs() <= 1e-6 * an.abs().max(1.0), "{an} vs {fd}");
        }
    }

    #[test]
    fn trig_compose_matches_adjoint() {
        let a = HVector::new(vec![0.3, 1.0, -0.4]).unwrap();
        let f: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
        let phi = random_orthogonal(3, 4).unwrap();
        let g = super::super::compose_orthogonal(f.clone(), &phi).unwrap();
        let x = HVector::new(vec![0.9, -0.1, 0.4]).unwrap();
        let phix = phi.apply(&x).unwrap();
        assert_abs_diff_eq!(g.eval(&x).re, f.eval(&phix).re, epsilon = 1e-12);
        let q = g.claims().qa.unwrap();
        let qf = f.claims().qa.unwrap();
        assert_abs_diff_eq!(
            crate::hilbert::q_form(&q.op, &x).unwrap(),
            crate::hilbert::q_form(&qf.op, &phix).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn trig_operator_claims() {
        let a = HVector::new(vec![0.5, 0.25, 0.125]).unwrap();
        let op = TraceClassOperator::diagonal(&[1.0, 0.5, 0.25]).unwrap();
        assert!(trig(a.clone(), 0.0, 1.0).with_trig_operator(&op).is_ok());
        let small = TraceClassOperator::diagonal(&[0.01, 0.01, 0.01]).unwrap();
        assert!(trig(a.clone(), 0.0, 1.0).with_trig_operator(&small).is_err());
        let frame = OrthonormalFrame::canonical(3).unwrap();
        let eps = EpsilonSequence::geometric(3, 0.25, 0.5).unwrap();
        let s = trig(a, 0.0, 1.0).with_trig_sm_claim(1, &frame, &eps).unwrap();
        assert_abs_diff_eq!(s.claims().smeps.unwrap().norm, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_heat_closed_form() {
        let c = TraceClassOperator::diagonal(&[0.8, 0.3]).unwrap();
        let bell = gaussian_bell(&c, 1.0);
        let h = bell.heat_closed_form(0.5).unwrap();
        // E exp(−c(s+Y)²/2), Y ~ N(0,t): (1+ct)^{-1/2} exp(−c s²/(2(1+ct)))
        let x = [0.7, -0.2];
        let expect: f64 = [(0.8, 0.7), (0.3, -0.2)]
            .iter()
            .map(|&(c, s): &(f64, f64)| (1.0 + c * 0.5).powf(-0.5) * (-c * s * s / (2.0 * (1.0 + c * 0.5))).exp())
            .product();
        assert_abs_diff_eq!(h.eval(&x).re, expect, epsilon = 1e-14);
    }
}
