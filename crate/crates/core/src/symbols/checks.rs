//! Sampling checks for claimed class norms and the bounds that follow from
//! them. Each check reports a witnessed worst ratio `lhs / rhs`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Symbol, SymbolRef};
use crate::error::{check_dims, invalid, LabError, Result};
use crate::hilbert::{EpsilonSequence, HVector, OrthonormalFrame, TraceClassOperator};

/// Relative slack allowed when comparing a sampled quantity with its bound.
pub const BOUND_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (`+∞` when `rhs = 0 < lhs`).
    pub worst_ratio: f64,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    pub pass: bool,
}

impl BoundReport {
    fn new() -> Self {
        BoundReport { pass: true, ..Default::default() }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        let ratio = if lhs <= 0.0 {
            0.0
        } else if rhs <= 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        if ratio > self.worst_ratio || self.samples == 1 {
            self.worst_ratio = ratio;
            self.worst_lhs = lhs;
            self.worst_rhs = rhs;
        }
        if !(lhs <= rhs * (1.0 + BOUND_REL_TOL) + 1e-14) {
            self.violations += 1;
            self.pass = false;
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Evaluation points: the origin, points where `⟨b, x⟩` runs over multiples
/// of `π/4` for every support vector `b`, and `random` Gaussian points.
pub fn probe_points(f: &dyn Symbol, random: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let dim = f.dim();
    let mut pts = vec![vec![0.0; dim]];
    for b in f.support().unwrap_or_default() {
        let n2 = b.norm_sq();
        if n2 == 0.0 {
            continue;
        }
        for k in -4..=4 {
            let theta = k as f64 * std::f64::consts::FRAC_PI_4;
            pts.push(b.iter().map(|bi| theta * bi / n2).collect());
        }
    }
    for _ in 0..random {
        pts.push(gaussian_vec(rng, dim));
    }
    pts
}

/// A witnessed lower bound for `‖F‖_{m,ε}` and where it was attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormWitness {
    pub value: f64,
    pub point: usize,
    pub multi_index: Vec<usize>,
}

/// All multi-indices supported on at most `max_support` frame indices with
/// entries in `1..=m`, plus `extra` random sparse ones with up to six
/// nonzero entries.
pub fn default_multi_indices(dim: usize, m: usize, max_support: usize, extra: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; dim]];
    fn rec(dim: usize, m: usize, left: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            return;
        }
        for j in start..dim {
            for v in 1..=m {
                cur[j] = v;
                out.push(cur.clone());
                rec(dim, m, left - 1, j + 1, cur, out);
            }
            cur[j] = 0;
        }
    }
    if m > 0 {
        rec(dim, m, max_support, 0, &mut vec![0; dim], &mut out);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..extra {
            let mut a = vec![0; dim];
            let nnz = rng.random_range(1..=6.min(dim));
            for _ in 0..nnz {
                a[rng.random_range(0..dim)] = rng.random_range(1..=m);
            }
            out.push(a);
        }
    }
    out
}

/// `max |∂^α F(x)| / Π ε_j^{α_j}` over the grid and multi-indices, where
/// `α_j` counts derivatives along frame vector `j`.
pub fn smeps_norm_lower_bound(
    f: &dyn Symbol,
    frame: &OrthonormalFrame,
    eps: &EpsilonSequence,
    m: usize,
    grid: &[Vec<f64>],
    multis: &[Vec<usize>],
) -> Result<NormWitness> {
    check_dims("smeps_norm_lower_bound", f.dim(), frame.dim())?;
    check_dims("smeps_norm_lower_bound", f.dim(), eps.len())?;
    let basis: Vec<HVector> = (0..frame.dim()).map(|j| frame.vector(j)).collect();
    let mut best = NormWitness { value: 0.0, point: 0, multi_index: vec![0; f.dim()] };
    for multi in multis {
        check_dims("multi-index", f.dim(), multi.len())?;
        if multi.iter().any(|&a| a > m) {
            return invalid(format!("multi-index {multi:?} exceeds depth {m}"));
        }
        let mut dirs: Vec<&[f64]> = Vec::new();
        let mut denom = 1.0;
        for (j, &a) in multi.iter().enumerate() {
            for _ in 0..a {
                dirs.push(&basis[j]);
            }
            denom *= eps.get(j).powi(a as i32);
        }
        for (i, x) in grid.iter().enumerate() {
            let d = f.derivative(x, &dirs)?.norm();
            let v = if d == 0.0 {
                0.0
            } else if denom == 0.0 {
                f64::INFINITY
            } else {
                d / denom
            };
            if v > best.value {
                best = NormWitness { value: v, point: i, multi_index: multi.clone() };
            }
        }
    }
    Ok(best)
}

/// Samples `|d^m f(x)(U_1..U_m)| ≤ C·Π Q_A(U_j)^{1/2}` for `m ≤ m_max`.
/// Directions are random Gaussian vectors, eigenvectors of `A` and the
/// symbol's support vectors; ratios are not capped, so a derivative along
/// a direction outside the range of `A` shows up as `+∞`.
pub fn qa_membership_check(
    f: &dyn Symbol,
    a: &TraceClassOperator,
    claimed_norm: f64,
    m_max: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    check_dims("qa_membership_check", f.dim(), a.dim())?;
    let dim = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = probe_points(f, trials, &mut rng);
    let mut candidates: Vec<Vec<f64>> = a.eigenvectors().iter().map(|u| u.to_vec()).collect();
    for b in f.support().unwrap_or_default() {
        let n = b.norm();
        if n > 0.0 {
            candidates.push(b.iter().map(|x| x / n).collect());
        }
    }
    let mut report = BoundReport::new();
    let m_max = m_max.min(f.max_order());
    for x in &points {
        report.record(f.eval(x).norm(), claimed_norm);
        for m in 1..=m_max {
            let mut sets: Vec<Vec<Vec<f64>>> = candidates.iter().map(|u| vec![u.clone(); m]).collect();
            for _ in 0..trials.min(8) {
                sets.push((0..m).map(|_| gaussian_vec(&mut rng, dim)).collect());
            }
            for dirs in &sets {
                let refs: Vec<&[f64]> = dirs.iter().map(|v| v.as_slice()).collect();
                let lhs = f.derivative(x, &refs)?.norm();
                let rhs = claimed_norm * refs.iter().map(|u| a.q_form_slice(u).sqrt()).product::<f64>();
                report.record(lhs, rhs);
            }
        }
    }
    Ok(report)
}

/// Checks a symbol against its own `S(Q_A)` claim.
pub fn qa_claim_check(f: &SymbolRef, m_max: usize, trials: usize, seed: u64) -> Result<BoundReport> {
    let q = f
        .claims()
        .qa
        .ok_or_else(|| LabError::InvalidArgument(format!("{} carries no S(Q_A) claim", f.label())))?;
    qa_membership_check(f.as_ref(), &q.op, q.norm, m_max, trials, seed)
}

fn sm_claim(f: &dyn Symbol, min_m: usize) -> Result<super::SmClaim> {
    let c = f
        .claims()
        .smeps
        .ok_or_else(|| LabError::InvalidArgument(format!("{} carries no S_m claim", f.label())))?;
    if c.m < min_m {
        return invalid(format!("claim has depth {} but {min_m} is needed", c.m));
    }
    Ok(c)
}

/// Samples `|Φ_k(x)(Y_1..Y_k)| ≤ 2^k ‖F‖_{m,ε} Π|Y_s| (Σ_Γ ε_j²)^{k/2}`.
pub fn taylor_form_bound_check(f: &dyn Symbol, k: usize, samples: usize, seed: u64) -> Result<BoundReport> {
    let claim = sm_claim(f, k)?;
    let dim = f.dim();
    let s2 = claim.eps.gamma_sum_sq(&claim.frame);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = probe_points(f, samples, &mut rng);
    let mut report = BoundReport::new();
    for (i, x) in points.iter().enumerate() {
        let ys: Vec<HVector> = (0..k)
            .map(|s| {
                if i % 3 == 0 {
                    claim.frame.vector((i / 3 + s) % dim)
                } else {
                    HVector::from_vec(gaussian_vec(&mut rng, dim))
                }
            })
            .collect();
        let lhs = super::taylor_form(f, x, &ys)?.norm();
        let rhs = 2f64.powi(k as i32) * claim.norm * ys.iter().map(|y| y.norm()).product::<f64>() * s2.powf(k as f64 / 2.0);
        report.record(lhs, rhs);
    }
    Ok(report)
}

/// Samples `|F(X+V) − F(X)| ≤ ‖F‖_{1,ε} |V| √2 (Σ_Γ ε_j²)^{1/2}`.
pub fn lipschitz_residual_check(f: &dyn Symbol, pairs: usize, seed: u64) -> Result<BoundReport> {
    let claim = sm_claim(f, 1)?;
    let dim = f.dim();
    let lip = claim.norm * std::f64::consts::SQRT_2 * claim.eps.gamma_sum_sq(&claim.frame).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = probe_points(f, pairs, &mut rng);
    let mut report = BoundReport::new();
    for x in &points {
        let scale: f64 = 10f64.powf(rng.random_range(-3.0..1.0));
        let v: Vec<f64> = gaussian_vec(&mut rng, dim).into_iter().map(|c| c * scale).collect();
        let xv: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
        let lhs = (f.eval(&xv) - f.eval(x)).norm();
        report.record(lhs, lip * crate::hilbert::norm(&v));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{trig, CylindricalSymbol};
    use super::*;
    use std::sync::Arc;

    fn grid(dim: usize) -> Vec<Vec<f64>> {
        let f = trig(HVector::basis(dim, 0), 0.0, 1.0);
        probe_points(&f, 20, &mut ChaCha8Rng::seed_from_u64(1))
    }

    #[test]
    fn smeps_examples() {
        let frame = OrthonormalFrame::canonical(2).unwrap();
        let multis = default_multi_indices(2, 1, 2, 0, 0);
        let c = CylindricalSymbol::constant(2, -2.5);
        let eps = EpsilonSequence::new(vec![1.0, 0.5]).unwrap();
        let w = smeps_norm_lower_bound(&c, &frame, &eps, 1, &grid(2), &multis).unwrap();
        assert_eq!(w.value, 2.5);
        let f = trig(HVector::basis(2, 0), 0.0, 1.0);
        let w = smeps_norm_lower_bound(&f, &frame, &eps, 1, &grid(2), &multis).unwrap();
        assert!((w.value - 1.0).abs() < 1e-12);
        let half = EpsilonSequence::new(vec![0.5, 0.5]).unwrap();
        let w = smeps_norm_lower_bound(&f, &frame, &half, 1, &grid(2), &multis).unwrap();
        assert!((w.value - 2.0).abs() < 1e-12);
        assert_eq!(w.multi_index, vec![1, 0]);
        let zero = EpsilonSequence::new(vec![0.0, 1.0]).unwrap();
        let w = smeps_norm_lower_bound(&f, &frame, &zero, 1, &grid(2), &multis).unwrap();
        assert_eq!(w.value, f64::INFINITY);
    }

    #[test]
    fn multi_index_count() {
        // 1 + 3·2 + 3·4 + 1·8 for dim 3, m 2, support 3
        assert_eq!(default_multi_indices(3, 2, 3, 0, 0).len(), 27);
    }

    #[test]
    fn qa_examples() {
        let a = HVector::new(vec![0.6, 0.8, 0.0]).unwrap();
        let op = TraceClassOperator::rank_one(&a);
        let c = CylindricalSymbol::constant(3, 4.0);
        assert!(qa_membership_check(&c, &op, 4.0, 3, 10, 1).unwrap().pass);
        let f = trig(a.clone(), 0.0, 1.0);
        let r = qa_membership_check(&f, &op, 1.0, 4, 20, 2).unwrap();
        assert!(r.pass, "{r:?}");
        let quarter = op.scaled(0.25).unwrap();
        let r = qa_membership_check(&f, &quarter, 1.0, 4, 20, 2).unwrap();
        assert!(!r.pass);
        assert!(r.worst_ratio >= 16.0 * (1.0 - 1e-12));
    }

    #[test]
    fn taylor_and_lipschitz_on_trig() {
        let frame = OrthonormalFrame::canonical(4).unwrap();
        let eps = EpsilonSequence::geometric(4, 1.0, 0.5).unwrap();
        let f = trig(HVector::basis(4, 0), 0.3, 1.0).with_trig_sm_claim(2, &frame, &eps).unwrap();
        let f: SymbolRef = Arc::new(f);
        for k in 0..=2 {
            assert!(taylor_form_bound_check(f.as_ref(), k, 200, k as u64).unwrap().pass);
        }
        let r = lipschitz_residual_check(f.as_ref(), 500, 3).unwrap();
        assert!(r.pass && r.worst_ratio < 1.0);
    }
}
