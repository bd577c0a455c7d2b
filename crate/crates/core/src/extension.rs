//! Stochastic-extension experiments along chains of subspaces.
//!
//! The extension `F̃` is represented by `F` on the full ambient truncation.
//! Every check compares a Monte Carlo estimate of an `L^p` distance with
//! the corresponding rate bound; a step passes when
//! `lhs ≤ rhs + 3·stderr`. Bounds are evaluated twice, inline and from a
//! regenerated [`ConstantsTable`], and the disagreement is recorded.

use serde::{Deserialize, Serialize};

use crate::constants::{rate_constants, rel_diff, ConstantsTable, RateConstants, TABLE_AGREEMENT_TOL};
use crate::error::{check_dims, invalid, LabError, Result};
use crate::gaussian::k_constant;
use crate::hilbert::{dot, HVector, OrthogonalMap, Subspace, TraceClassOperator};
use crate::quadrature::{gauss_legendre_unit, gaussian_expectation_kinked};
use crate::report::{fmt_num, CsvTable};
use crate::sampling::{Estimate, GaussianMeasureSpec, McPlan, SampleBatch};
use crate::symbols::{Symbol, SmClaim};

/// Number of standard errors allowed above a bound.
pub const SIGMA_GATE: f64 = 3.0;

/// `lhs ≤ rhs + 3·stderr`, with a relative `1e−12` allowance for rounding.
pub fn gate(lhs: f64, rhs: f64, stderr: f64) -> bool {
    lhs <= rhs + SIGMA_GATE * stderr + 1e-12 * (1.0 + rhs.abs())
}

/// Variance, sampling schedule and seed shared by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSetup {
    pub h: f64,
    pub plan: McPlan,
    pub seed: u64,
}

impl McSetup {
    pub fn new(h: f64, plan: McPlan, seed: u64) -> Self {
        McSetup { h, plan, seed }
    }

    fn run(&self, dim: usize, scale: f64, est: impl Fn(&SampleBatch) -> Result<Estimate>) -> Result<Estimate> {
        let spec = GaussianMeasureSpec::new(dim, self.h)?;
        self.plan.run(spec, self.seed, scale, est)
    }
}

/// Increasing subspaces `E_1 ⊂ … ⊂ E_K` of the ambient truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceChain {
    ambient_dim: usize,
    chain: Vec<Subspace>,
}

impl SubspaceChain {
    pub fn new(ambient_dim: usize, chain: Vec<Subspace>) -> Result<Self> {
        if chain.is_empty() {
            return invalid("subspace chain must have at least one element");
        }
        for e in &chain {
            check_dims("subspace chain", ambient_dim, e.ambient_dim())?;
        }
        for (n, w) in chain.windows(2).enumerate() {
            if !w[1].extends(&w[0]) {
                return invalid(format!("chain element {} does not extend element {n}", n + 1));
            }
        }
        Ok(SubspaceChain { ambient_dim, chain })
    }

    /// `E_n = span(e_0, …, e_{d_n − 1})`.
    pub fn coordinate(ambient_dim: usize, dims: &[usize]) -> Result<Self> {
        let chain = dims.iter().map(|&d| Subspace::coordinate(ambient_dim, d)).collect::<Result<_>>()?;
        Self::new(ambient_dim, chain)
    }

    /// `E_n = span(φe_0, …, φe_{d_n − 1})`.
    pub fn rotated(phi: &OrthogonalMap, dims: &[usize]) -> Result<Self> {
        let d = phi.dim();
        let chain = dims
            .iter()
            .map(|&n| {
                if n > d {
                    return invalid(format!("chain dimension {n} exceeds {d}"));
                }
                Subspace::new(d, (0..n).map(|j| phi.column(j)).collect())
            })
            .collect::<Result<_>>()?;
        Self::new(d, chain)
    }

    /// Dimensions `D/K, 2D/K, …, D` (rounded up).
    pub fn even_dims(ambient_dim: usize, steps: usize) -> Vec<usize> {
        (1..=steps).map(|k| (k * ambient_dim).div_ceil(steps)).collect()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn steps(&self) -> &[Subspace] {
        &self.chain
    }
}

/// Orthogonal complement of `e` inside `f` when `f` extends `e`.
fn difference_space(e: &Subspace, f: &Subspace) -> Result<Subspace> {
    Subspace::new(f.ambient_dim(), f.basis()[e.dim()..].to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub step: usize,
    /// `dim E_n`
    pub n: usize,
    pub lhs: f64,
    pub stderr: f64,
    pub rhs: f64,
    pub pass: bool,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    /// Exponent of the `L^p` / `L^q` norm.
    pub exponent: f64,
    pub h: f64,
    pub seed: u64,
    /// Largest relative gap between inline and tabulated bounds.
    pub table_disagreement: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    fn new(experiment: &str, exponent: f64, setup: &McSetup) -> Self {
        ConvergenceReport {
            experiment: experiment.to_string(),
            exponent,
            h: setup.h,
            seed: setup.seed,
            table_disagreement: 0.0,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, n: usize, est: Estimate, rhs: f64) {
        self.rows.push(ConvergenceRow {
            step: self.rows.len(),
            n,
            lhs: est.value,
            stderr: est.stderr,
            rhs,
            pass: gate(est.value, rhs, est.stderr),
            samples: est.count,
        });
    }

    fn agree(&mut self, inline: f64, tabled: f64) {
        self.table_disagreement = self.table_disagreement.max(rel_diff(inline, tabled));
    }

    pub fn pass(&self) -> bool {
        self.table_disagreement < TABLE_AGREEMENT_TOL && self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["step", "n", "lhs", "stderr", "rhs", "pass"]);
        for r in &self.rows {
            t.push(vec![
                r.step.to_string(),
                r.n.to_string(),
                fmt_num(r.lhs),
                fmt_num(r.stderr),
                fmt_num(r.rhs),
                r.pass.to_string(),
            ]);
        }
        t.render()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn table_row(p: f64, trace: f64) -> Result<crate::constants::ConstantsRow> {
    let t = ConstantsTable::regenerate(&[p], trace)?;
    Ok(t.rows[0].clone())
}

/// `‖F(π_E · + Y) − F(· + Y)‖_{L^q(μ_h)}` on one batch; `Y = 0` when
/// `shift` is `None`. Exactly zero when `E` is the ambient space.
pub fn lq_distance_translated(
    f: &dyn Symbol,
    e: &Subspace,
    shift: Option<&HVector>,
    q: f64,
    batch: &SampleBatch,
) -> Result<Estimate> {
    check_dims("lq_distance", batch.dim(), f.dim())?;
    check_dims("lq_distance", batch.dim(), e.ambient_dim())?;
    if let Some(y) = shift {
        check_dims("lq_distance", batch.dim(), y.dim())?;
    }
    if e.dim() == e.ambient_dim() {
        return Ok(Estimate { value: 0.0, stderr: 0.0, count: batch.count });
    }
    let dim = batch.dim();
    batch.lq_norm(q, |x| {
        let mut px = vec![0.0; dim];
        e.project_into(x, &mut px);
        let mut xs = x.to_vec();
        if let Some(y) = shift {
            for i in 0..dim {
                px[i] += y[i];
                xs[i] += y[i];
            }
        }
        (f.eval(&px) - f.eval(&xs)).norm()
    })
}

/// `‖F∘π_E − F‖_{L^q(μ_h)}` with a jackknife standard error.
pub fn lq_distance(f: &dyn Symbol, e: &Subspace, q: f64, batch: &SampleBatch) -> Result<Estimate> {
    lq_distance_translated(f, e, None, q, batch)
}

fn sm_claim(f: &dyn Symbol) -> Result<SmClaim> {
    let c = f
        .claims()
        .smeps
        .ok_or_else(|| LabError::InvalidArgument(format!("{} carries no S_m claim", f.label())))?;
    if c.m < 1 {
        return invalid("rate bounds need an S_m claim with m ≥ 1");
    }
    check_dims("S_m claim", f.dim(), c.frame.dim())?;
    Ok(c)
}

/// `Σ_Γ ε_Γ Σ_{i ∈ Γ} |P e_i|` for the frame vectors `e_i` of the claim.
fn eps_weighted(claim: &SmClaim, p_norm: impl Fn(&[f64]) -> f64) -> f64 {
    let groups = claim.frame.gamma_groups();
    let eg = claim.eps.gamma_values(&claim.frame);
    groups
        .iter()
        .zip(eg)
        .map(|(g, e)| if e == 0.0 { 0.0 } else { e * g.iter().map(|&i| p_norm(&claim.frame.vector(i))).sum::<f64>() })
        .sum()
}

fn complement_norm(e: &Subspace, v: &[f64]) -> f64 {
    let mut p = vec![0.0; v.len()];
    e.project_into(v, &mut p);
    p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn proj_norm(e: &Subspace, v: &[f64]) -> f64 {
    let mut p = vec![0.0; v.len()];
    e.project_into(v, &mut p);
    crate::hilbert::norm(&p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmRateReport {
    /// `‖F∘π_{E_n} − F‖_q` against `‖F‖_{1,ε} K(q) h^{1/2} Σ ε_j |u_j − π_{E_n} u_j|`.
    pub direct: ConvergenceReport,
    /// `‖F∘π_{E_{n+1}} − F∘π_{E_n}‖_q` against the same bound on `E_{n+1} ⊖ E_n`.
    pub cauchy: ConvergenceReport,
}

impl SmRateReport {
    pub fn pass(&self) -> bool {
        self.direct.pass() && self.cauchy.pass()
    }
}

/// Rate of `F∘π_E → F̃` for `F` with an `S_1(B, ε)` claim, plus the Cauchy
/// variant between consecutive chain elements.
pub fn sm_rate_check(f: &dyn Symbol, chain: &SubspaceChain, q: f64, setup: &McSetup) -> Result<SmRateReport> {
    check_dims("sm_rate_check", chain.ambient_dim(), f.dim())?;
    let claim = sm_claim(f)?;
    let kq = k_constant(q)?;
    let kq_table = table_row(q, 0.0)?.k;
    let scale = claim.norm * setup.h.sqrt();
    let mut direct = ConvergenceReport::new("sm_rate", q, setup);
    let mut cauchy = ConvergenceReport::new("sm_rate_cauchy", q, setup);
    direct.agree(kq, kq_table);
    cauchy.agree(kq, kq_table);
    let dim = f.dim();
    for e in chain.steps() {
        let w = eps_weighted(&claim, |v| complement_norm(e, v));
        let rhs = scale * kq * w;
        direct.agree(rhs, scale * kq_table * w);
        let est = setup.run(dim, rhs, |b| lq_distance(f, e, q, b))?;
        direct.push(e.dim(), est, rhs);
    }
    for pair in chain.steps().windows(2) {
        let (e, g) = (&pair[0], &pair[1]);
        let s = difference_space(e, g)?;
        let w = eps_weighted(&claim, |v| proj_norm(&s, v));
        let rhs = scale * kq * w;
        cauchy.agree(rhs, scale * kq_table * w);
        let est = setup.run(dim, rhs, |b| {
            b.lq_norm(q, |x| {
                let mut pe = vec![0.0; dim];
                let mut pg = vec![0.0; dim];
                e.project_into(x, &mut pe);
                g.project_into(x, &mut pg);
                (f.eval(&pg) - f.eval(&pe)).norm()
            })
        })?;
        cauchy.push(g.dim(), est, rhs);
    }
    Ok(SmRateReport { direct, cauchy })
}

/// `(Σ_j λ_j w(u_j)^α)^{1/α}`.
fn lambda_sum(op: &TraceClassOperator, alpha: f64, w: impl Fn(&[f64]) -> f64) -> f64 {
    op.eigenvalues()
        .iter()
        .zip(op.eigenvectors())
        .map(|(l, u)| l * w(u).powf(alpha))
        .sum::<f64>()
        .powf(1.0 / alpha)
}

/// `C(p) h^{1/2} (Σ λ_j w(u_j)^{α(p)})^{1/α(p)}`, inline and tabulated.
fn qa_bound(op: &TraceClassOperator, p: f64, h: f64, w: impl Fn(&[f64]) -> f64 + Copy) -> Result<(f64, f64)> {
    let RateConstants { c, alpha, .. } = rate_constants(p, op.trace())?;
    let row = table_row(p, op.trace())?;
    Ok((
        c * h.sqrt() * lambda_sum(op, alpha, w),
        row.c * h.sqrt() * lambda_sum(op, row.alpha, w),
    ))
}

/// `‖f∘π_E − f‖_{L^p} ≤ C(p) h^{1/2} ‖f‖_{Q_A} (Σ λ_j |π_E u_j − u_j|^{α(p)})^{1/α(p)}`
/// at every chain step.
pub fn qa_rate_check(f: &dyn Symbol, chain: &SubspaceChain, p: f64, setup: &McSetup) -> Result<ConvergenceReport> {
    check_dims("qa_rate_check", chain.ambient_dim(), f.dim())?;
    let claim = f
        .claims()
        .qa
        .ok_or_else(|| LabError::InvalidArgument(format!("{} carries no S(Q_A) claim", f.label())))?;
    let mut report = ConvergenceReport::new("qa_rate", p, setup);
    for e in chain.steps() {
        let (inline, tabled) = qa_bound(&claim.op, p, setup.h, |u| complement_norm(e, u))?;
        let rhs = claim.norm * inline;
        report.agree(rhs, claim.norm * tabled);
        let est = setup.run(f.dim(), rhs, |b| lq_distance(f, e, p, b))?;
        report.push(e.dim(), est, rhs);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMomentReport {
    pub p: f64,
    pub lhs: Estimate,
    /// `C(p) (Σ λ_j |π_E u_j|^{α(p)})^{1/α(p)} h^{1/2}`
    pub bound: f64,
    /// `C(p) (Σ λ_j)^{1/α(p)} h^{1/2}`
    pub e_free_bound: f64,
    /// `(h Σ λ_j |π_E u_j|²)^{1/2}`, the exact value at `p = 2`.
    pub exact_p2: f64,
    pub table_disagreement: f64,
    pub pass: bool,
}

/// `‖Q_A^{1/2}∘π_E‖_{L^p}` against its bound and the `E`-free bound.
pub fn qa_projection_moment_check(
    op: &TraceClassOperator,
    e: &Subspace,
    p: f64,
    setup: &McSetup,
) -> Result<ProjectionMomentReport> {
    check_dims("qa_projection_moment_check", op.dim(), e.ambient_dim())?;
    let (bound, tabled) = qa_bound(op, p, setup.h, |u| proj_norm(e, u))?;
    let (e_free_bound, e_free_tabled) = qa_bound(op, p, setup.h, |_| 1.0)?;
    let exact_p2 = (setup.h * lambda_sum(op, 2.0, |u| proj_norm(e, u)).powi(2)).sqrt();
    let dim = op.dim();
    let lhs = if op.rank() == 0 || e.dim() == 0 {
        Estimate { value: 0.0, stderr: 0.0, count: 0 }
    } else {
        setup.run(dim, bound, |b| {
            b.lq_norm(p, |x| {
                let mut px = vec![0.0; dim];
                e.project_into(x, &mut px);
                op.q_form_slice(&px).sqrt()
            })
        })?
    };
    let table_disagreement = rel_diff(bound, tabled).max(rel_diff(e_free_bound, e_free_tabled));
    let pass = table_disagreement < TABLE_AGREEMENT_TOL
        && gate(lhs.value, bound, lhs.stderr)
        && gate(lhs.value, e_free_bound, lhs.stderr);
    Ok(ProjectionMomentReport { p, lhs, bound, e_free_bound, exact_p2, table_disagreement, pass })
}

fn repeated(v: &[f64], k: usize) -> Vec<&[f64]> {
    vec![v; k]
}

/// `k ‖f‖ C(pk)^k S^{(k−1)/α(pk)} h^{k/2} (Σ λ_s |π_E u_s − u_s|^{α(pk)})^{1/α(pk)}`,
/// inline and tabulated.
fn derivative_bound(op: &TraceClassOperator, norm: f64, k: usize, p: f64, h: f64, e: &Subspace) -> Result<(f64, f64)> {
    let pk = p * k as f64;
    let s = op.trace();
    let kf = k as f64;
    let eval = |c: f64, alpha: f64| {
        kf * norm * c.powi(k as i32) * s.powf((kf - 1.0) / alpha) * h.powf(kf / 2.0)
            * lambda_sum(op, alpha, |u| complement_norm(e, u))
    };
    let inline = rate_constants(pk, s)?;
    let row = table_row(pk, s)?;
    Ok((eval(inline.c, inline.alpha), eval(row.c, row.alpha)))
}

/// `‖d^k f(x)·π_E(y)^k − d^k f(x)·y^k‖_{L^p}` along the chain.
pub fn derivative_extension_rate(
    f: &dyn Symbol,
    x: &HVector,
    k: usize,
    chain: &SubspaceChain,
    p: f64,
    setup: &McSetup,
) -> Result<ConvergenceReport> {
    if k == 0 {
        return invalid("derivative order must be at least 1");
    }
    check_dims("derivative_extension_rate", chain.ambient_dim(), f.dim())?;
    check_dims("derivative_extension_rate", f.dim(), x.dim())?;
    let claim = f
        .claims()
        .qa
        .ok_or_else(|| LabError::InvalidArgument(format!("{} carries no S(Q_A) claim", f.label())))?;
    let mut report = ConvergenceReport::new(&format!("derivative_extension_k{k}"), p, setup);
    let dim = f.dim();
    for e in chain.steps() {
        let (rhs, tabled) = derivative_bound(&claim.op, claim.norm, k, p, setup.h, e)?;
        report.agree(rhs, tabled);
        let est = if e.dim() == dim {
            Estimate { value: 0.0, stderr: 0.0, count: 0 }
        } else {
            setup.run(dim, rhs, |b| {
                b.lq_norm(p, |y| {
                    let mut py = vec![0.0; dim];
                    e.project_into(y, &mut py);
                    let a = f.derivative(x, &repeated(&py, k)).unwrap_or(f64::NAN.into());
                    let c = f.derivative(x, &repeated(y, k)).unwrap_or(f64::NAN.into());
                    (a - c).norm()
                })
            })?
        };
        report.push(e.dim(), est, rhs);
    }
    Ok(report)
}

fn check_prodscal(a_list: &[HVector], exps: &[u32]) -> Result<usize> {
    if a_list.is_empty() || a_list.len() != exps.len() {
        return invalid("need one positive exponent per vector");
    }
    if exps.contains(&0) {
        return invalid("exponents must be positive");
    }
    let dim = a_list[0].dim();
    for a in a_list {
        check_dims("prodscal", dim, a.dim())?;
    }
    Ok(dim)
}

fn monomial(a_list: &[HVector], exps: &[u32], x: &[f64]) -> f64 {
    a_list.iter().zip(exps).map(|(a, &e)| dot(a, x).powi(e as i32)).product()
}

/// `‖⟨a, π_E ·⟩ − ℓ_a‖_{L^p} = K(p) h^{1/2} |π_E a − a|`.
pub fn ext_prodscal_closed_form(a: &HVector, e: &Subspace, p: f64, h: f64) -> Result<f64> {
    check_dims("ext_prodscal", e.ambient_dim(), a.dim())?;
    Ok(k_constant(p)? * h.sqrt() * complement_norm(e, a))
}

/// `‖a^α∘π_E − Π ℓ_{a_i}^{α_i}‖_{L^p} ≤ K(p|α|)^{|α|} h^{|α|/2} (max|a_i|)^{|α|−1} Σ α_i |π_E a_i − a_i|`.
pub fn prodscal_rate_check(
    a_list: &[HVector],
    exps: &[u32],
    chain: &SubspaceChain,
    p: f64,
    setup: &McSetup,
) -> Result<ConvergenceReport> {
    let dim = check_prodscal(a_list, exps)?;
    check_dims("prodscal_rate_check", chain.ambient_dim(), dim)?;
    let total: u32 = exps.iter().sum();
    let pa = p * total as f64;
    let amax = a_list.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut report = ConvergenceReport::new("prodscal_rate", p, setup);
    let k_inline = k_constant(pa)?;
    let k_table = table_row(pa, 0.0)?.k;
    for e in chain.steps() {
        let spread: f64 = a_list.iter().zip(exps).map(|(a, &al)| al as f64 * complement_norm(e, a)).sum();
        let tail = setup.h.powf(total as f64 / 2.0) * amax.powi(total as i32 - 1) * spread;
        let rhs = k_inline.powi(total as i32) * tail;
        report.agree(rhs, k_table.powi(total as i32) * tail);
        let est = if e.dim() == dim {
            Estimate { value: 0.0, stderr: 0.0, count: 0 }
        } else {
            setup.run(dim, rhs, |b| {
                b.lq_norm(p, |x| {
                    let mut px = vec![0.0; dim];
                    e.project_into(x, &mut px);
                    monomial(a_list, exps, &px) - monomial(a_list, exps, x)
                })
            })?
        };
        report.push(e.dim(), est, rhs);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmRow {
    pub y_norm: f64,
    /// `‖F̃(· + Y)‖_{L¹(μ_{h/2})} / (1 + |Y|)^m`
    pub ratio: Estimate,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmReport {
    pub m: u32,
    pub bound: f64,
    pub rows: Vec<NmRow>,
}

impl NmReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// `∫ (1 + |v|)^k dμ_{ℝ,1}(v)` by quadrature.
pub fn one_plus_abs_moment(k: f64) -> Result<f64> {
    Ok(gaussian_expectation_kinked(|v| (1.0 + v.abs()).powf(k), &[0.0], 1e-13)?.value)
}

/// The product bound for `N_m(F̃)` with `F̃(x, ξ) = Π ℓ_{a_i}^{α_i}(x) Π ℓ_{b_i}^{β_i}(ξ)`.
pub fn nm_bound(a_list: &[HVector], alpha: &[u32], b_list: &[HVector], beta: &[u32], h: f64) -> Result<f64> {
    let na = a_list.len() as f64;
    let nb = b_list.len() as f64;
    let total: u32 = alpha.iter().chain(beta).sum();
    let mut bound = (h / 2.0).sqrt().max(1.0).powi(total as i32);
    for (a, &e) in a_list.iter().zip(alpha) {
        bound *= a.norm().powi(e as i32) * one_plus_abs_moment(na * e as f64)?.powf(1.0 / na);
    }
    for (b, &e) in b_list.iter().zip(beta) {
        bound *= b.norm().powi(e as i32) * one_plus_abs_moment(nb * e as f64)?.powf(1.0 / nb);
    }
    Ok(bound)
}

/// Witnesses `N_m(F̃)` on a grid of shifts `Y = (y, η)` by Monte Carlo over
/// `μ_{h/2}` on `H²` and compares with [`nm_bound`].
pub fn nm_bound_check(
    a_list: &[HVector],
    alpha: &[u32],
    b_list: &[HVector],
    beta: &[u32],
    h: f64,
    y_grid: &[(HVector, HVector)],
    plan: &McPlan,
    seed: u64,
) -> Result<NmReport> {
    let dim = check_prodscal(a_list, alpha)?;
    if !b_list.is_empty() {
        check_dims("nm_bound_check", dim, check_prodscal(b_list, beta)?)?;
    } else if !beta.is_empty() {
        return invalid("β given without vectors");
    }
    let m = alpha.iter().sum::<u32>().max(beta.iter().sum());
    let bound = nm_bound(a_list, alpha, b_list, beta, h)?;
    let spec = GaussianMeasureSpec::new(2 * dim, h / 2.0)?;
    let mut rows = Vec::new();
    for (y, eta) in y_grid {
        check_dims("nm_bound_check", dim, y.dim())?;
        check_dims("nm_bound_check", dim, eta.dim())?;
        let y_norm = (y.norm_sq() + eta.norm_sq()).sqrt();
        let denom = (1.0 + y_norm).powi(m as i32);
        let est = plan.run(spec, seed, bound, |batch| {
            batch.mean(|row| {
                let x: Vec<f64> = row[..dim].iter().zip(y.iter()).map(|(a, b)| a + b).collect();
                let xi: Vec<f64> = row[dim..].iter().zip(eta.iter()).map(|(a, b)| a + b).collect();
                (monomial(a_list, alpha, &x) * monomial(b_list, beta, &xi)).abs() / denom
            })
        })?;
        rows.push(NmRow { y_norm, ratio: est, pass: gate(est.value, bound, est.stderr) });
    }
    Ok(NmReport { m, bound, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorExtensionReport {
    pub k: usize,
    /// Largest `|F(x+Y) − Σ_{i≤k} Φ_i(x)Y^i/i! − R_k(x, Y)|` over the probe
    /// set, with `R_k` in integral form.
    pub identity_residual: f64,
    /// One report per term `Φ_i(x)·Y^i / i!`, `i = 1..k`, then the remainder.
    pub terms: Vec<ConvergenceReport>,
}

impl TaylorExtensionReport {
    pub fn pass(&self) -> bool {
        self.identity_residual <= 1e-10 && self.terms.iter().all(|t| t.pass())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `Σ_{i≤k} d^i F(x)·y^i / i!`, term by term.
fn taylor_terms(f: &dyn Symbol, x: &[f64], y: &[f64], k: usize) -> Result<Vec<num_complex::Complex64>> {
    (0..=k).map(|i| Ok(f.derivative(x, &repeated(y, i))? / factorial(i))).collect()
}

/// Integral remainder `∫_0^1 (1−θ)^k/k! d^{k+1}F(x+θy)·y^{k+1} dθ`.
fn integral_remainder(f: &dyn Symbol, x: &[f64], y: &[f64], k: usize) -> Result<num_complex::Complex64> {
    let (nodes, weights) = gauss_legendre_unit(48)?;
    let mut total = num_complex::Complex64::new(0.0, 0.0);
    for (t, w) in nodes.iter().zip(&weights) {
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + t * b).collect();
        total += w * (1.0 - t).powi(k as i32) / factorial(k) * f.derivative(&z, &repeated(y, k + 1))?;
    }
    Ok(total)
}

/// Extended Taylor formula along the chain: the pointwise identity at
/// truncation, and for each term the `L^p` distance between its projected
/// and ambient versions. Bounds come from the `S(Q_A)` claim when present
/// (`+∞` otherwise); the remainder bound is the triangle inequality over the
/// translated symbol and the polynomial terms.
pub fn extended_taylor_residual(
    f: &dyn Symbol,
    x: &HVector,
    k: usize,
    chain: &SubspaceChain,
    p: f64,
    setup: &McSetup,
) -> Result<TaylorExtensionReport> {
    check_dims("extended_taylor_residual", chain.ambient_dim(), f.dim())?;
    check_dims("extended_taylor_residual", f.dim(), x.dim())?;
    if k + 1 > f.max_order() {
        return Err(LabError::UnsupportedOrder { requested: k + 1, available: f.max_order() });
    }
    let dim = f.dim();
    // pointwise identity on a few deterministic probes
    let mut identity_residual: f64 = 0.0;
    {
        let batch = crate::sampling::gaussian_sample(GaussianMeasureSpec::new(dim, setup.h)?, setup.seed, 16)?;
        let rows = batch.to_matrix();
        for y in rows.chunks_exact(dim) {
            let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
            let sum: num_complex::Complex64 = taylor_terms(f, x, y, k)?.iter().sum();
            let r = integral_remainder(f, x, y, k)?;
            let scale = f.eval(&xy).norm().max(1.0);
            identity_residual = identity_residual.max((f.eval(&xy) - sum - r).norm() / scale);
        }
    }
    let qa = f.claims().qa;
    let mut terms: Vec<ConvergenceReport> = (1..=k)
        .map(|i| ConvergenceReport::new(&format!("taylor_term_{i}"), p, setup))
        .collect();
    terms.push(ConvergenceReport::new("taylor_remainder", p, setup));
    for e in chain.steps() {
        let mut rhs_terms = Vec::with_capacity(k);
        for (i, report) in terms.iter_mut().enumerate().take(k) {
            let rhs = match &qa {
                Some(c) => {
                    let (inline, tabled) = derivative_bound(&c.op, c.norm, i + 1, p, setup.h, e)?;
                    report.agree(inline, tabled);
                    inline / factorial(i + 1)
                }
                None => f64::INFINITY,
            };
            rhs_terms.push(rhs);
        }
        let rem_rhs = match &qa {
            Some(c) => {
                let (inline, tabled) = qa_bound(&c.op, p, setup.h, |u| complement_norm(e, u))?;
                terms[k].agree(inline, tabled);
                c.norm * inline + rhs_terms.iter().sum::<f64>()
            }
            None => f64::INFINITY,
        };
        let scale = rhs_terms.iter().cloned().fold(rem_rhs, f64::min);
        let exact_top = e.dim() == dim;
        // joint estimation keeps the sample schedule common to all terms
        let ests = if exact_top {
            vec![Estimate { value: 0.0, stderr: 0.0, count: 0 }; k + 1]
        } else {
            let spec = GaussianMeasureSpec::new(dim, setup.h)?;
            run_joint(&setup.plan, spec, setup.seed, scale, k + 1, |y, out| {
                let mut py = vec![0.0; dim];
                e.project_into(y, &mut py);
                let tp = taylor_terms(f, x, &py, k).unwrap_or_default();
                let ta = taylor_terms(f, x, y, k).unwrap_or_default();
                let mut poly_diff = num_complex::Complex64::new(0.0, 0.0);
                for i in 1..=k {
                    let d = tp.get(i).copied().unwrap_or(f64::NAN.into()) - ta.get(i).copied().unwrap_or(f64::NAN.into());
                    out[i - 1] = d.norm().powf(p);
                    poly_diff += d;
                }
                let xp: Vec<f64> = x.iter().zip(&py).map(|(a, b)| a + b).collect();
                let xa: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                let rem = (f.eval(&xp) - f.eval(&xa)) - poly_diff;
                out[k] = rem.norm().powf(p);
            }, p)?
        };
        for (i, est) in ests.into_iter().enumerate() {
            let rhs = if i < k { rhs_terms[i] } else { rem_rhs };
            terms[i].push(e.dim(), est, rhs);
        }
    }
    Ok(TaylorExtensionReport { k, identity_residual, terms })
}

/// `L^p` norms of several statistics sharing one sample schedule; the
/// closure writes `|g_i|^p`. Standard errors by the delta method.
fn run_joint(
    plan: &McPlan,
    spec: GaussianMeasureSpec,
    seed: u64,
    scale: f64,
    k: usize,
    g: impl Fn(&[f64], &mut [f64]) + Sync,
    p: f64,
) -> Result<Vec<Estimate>> {
    let mut count = plan.initial.max(1);
    loop {
        let batch = crate::sampling::gaussian_sample(spec, seed, count)?;
        let means = batch.means(k, &g)?;
        let ests: Vec<Estimate> = means
            .iter()
            .map(|m| {
                let v = m.value.max(0.0);
                let value = v.powf(1.0 / p);
                let stderr = if v > 0.0 { m.stderr * v.powf(1.0 / p - 1.0) / p } else { 0.0 };
                Estimate { value, stderr, count: m.count }
            })
            .collect();
        let worst = ests.iter().map(|e| e.stderr).fold(0.0, f64::max);
        if worst == 0.0 || worst < plan.rel_target * scale || count >= plan.cap {
            return Ok(ests);
        }
        count = (2 * count).min(plan.cap);
    }
}

/// `‖F‖_{L^p(μ_h)}` against the claimed `‖F‖_{1,ε}`: the extension is
/// bounded by the class norm.
pub fn extension_contraction_check(f: &dyn Symbol, p: f64, setup: &McSetup) -> Result<(Estimate, f64, bool)> {
    let claim = sm_claim(f)?;
    let est = setup.run(f.dim(), claim.norm, |b| b.lq_norm(p, |x| f.eval(x).norm()))?;
    Ok((est, claim.norm, gate(est.value, claim.norm, est.stderr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{EpsilonSequence, OrthonormalFrame};
    use crate::symbols::{linear, trig};

    fn setup(seed: u64) -> McSetup {
        McSetup::new(1.0, McPlan::fixed(40_000), seed)
    }

    #[test]
    fn chain_validation() {
        assert!(SubspaceChain::coordinate(4, &[1, 2, 4]).is_ok());
        assert!(SubspaceChain::coordinate(4, &[2, 1]).is_err());
        assert_eq!(SubspaceChain::even_dims(32, 8), vec![4, 8, 12, 16, 20, 24, 28, 32]);
    }

    #[test]
    fn linear_distance_matches_closed_form() {
        let a = HVector::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let f = linear(a.clone());
        let e = Subspace::coordinate(4, 2).unwrap();
        let batch = crate::sampling::gaussian_sample(GaussianMeasureSpec::new(4, 1.0).unwrap(), 3, 200_000).unwrap();
        for q in [1.0, 2.0, 4.0] {
            let est = lq_distance(&f, &e, q, &batch).unwrap();
            let exact = ext_prodscal_closed_form(&a, &e, q, 1.0).unwrap();
            assert!(est.within(exact, 3.0), "{q}: {est:?} vs {exact}");
        }
        let full = Subspace::full(4).unwrap();
        assert_eq!(lq_distance(&f, &full, 2.0, &batch).unwrap().value, 0.0);
    }

    #[test]
    fn rate_checks_pass_on_trig() {
        let d = 8;
        let a = HVector::new((0..d).map(|j| 0.5f64.powi(j as i32)).collect()).unwrap();
        let frame = OrthonormalFrame::canonical(d).unwrap();
        let eps = EpsilonSequence::geometric(d, 1.0, 0.5).unwrap();
        let f = trig(a.clone(), 0.2, 1.0).with_trig_sm_claim(1, &frame, &eps).unwrap();
        let chain = SubspaceChain::coordinate(d, &[1, 2, 4, 8]).unwrap();
        let r = sm_rate_check(&f, &chain, 2.0, &setup(1)).unwrap();
        assert!(r.pass(), "{r:?}");
        assert_eq!(r.direct.rows.last().unwrap().lhs, 0.0);
        let r = qa_rate_check(&f, &chain, 4.0, &setup(2)).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn projection_moment_p2_is_exact() {
        let op = TraceClassOperator::diagonal(&[1.0, 0.5, 0.25]).unwrap();
        let e = Subspace::span(3, &[HVector::new(vec![1.0, 1.0, 0.0]).unwrap()]).unwrap();
        let r = qa_projection_moment_check(&op, &e, 2.0, &setup(4)).unwrap();
        assert!((r.bound - r.exact_p2).abs() < 1e-14);
        assert!(r.lhs.within(r.exact_p2, 3.0) && r.pass, "{r:?}");
        let zero = TraceClassOperator::zero(3);
        let r = qa_projection_moment_check(&zero, &e, 4.0, &setup(4)).unwrap();
        assert_eq!((r.lhs.value, r.bound), (0.0, 0.0));
    }

    #[test]
    fn nm_minimal_case() {
        let a = HVector::basis(2, 0);
        let r = nm_bound_check(&[a], &[1], &[], &[], 2.0, &[(HVector::zeros(2), HVector::zeros(2))], &McPlan::fixed(200_000), 5)
            .unwrap();
        assert!(r.rows[0].ratio.within((2.0 / std::f64::consts::PI).sqrt(), 3.0));
        assert!(r.pass());
    }

    #[test]
    fn taylor_identity_and_terms() {
        let a = HVector::new(vec![0.8, 0.4, 0.2, 0.1]).unwrap();
        let f = trig(a, 0.0, 1.0);
        let x = HVector::new(vec![0.3, -0.2, 0.5, 0.0]).unwrap();
        let chain = SubspaceChain::coordinate(4, &[1, 2, 4]).unwrap();
        let r = extended_taylor_residual(&f, &x, 2, &chain, 2.0, &setup(6)).unwrap();
        assert!(r.identity_residual < 1e-12, "{}", r.identity_residual);
        assert!(r.pass(), "{r:?}");
    }
}
