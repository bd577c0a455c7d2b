//! Moments of `μ_{E,h}`, Wick pairing sums, the translation identity and the
//! Hölder telescoping inequality.

use std::f64::consts::PI;

use arrayvec::ArrayVec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, LabError, Result};
use crate::hilbert::{dot, HVector};
use crate::quadrature::gaussian_expectation_kinked;
use crate::symbols::Symbol;

pub use crate::sampling::{gaussian_sample, GaussianMeasureSpec, SampleBatch};

/// Largest number of vectors accepted by the pairing routines.
pub const MAX_WICK_VECTORS: usize = 16;

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `K(p) = 2^{1/2} π^{−1/(2p)} Γ((p+1)/2)^{1/p}`, so that
/// `‖ℓ_a‖_{L^p(μ_h)} = K(p) h^{1/2} |a|`.
pub fn k_constant(p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return invalid(format!("K(p) requires p ≥ 1, got {p}"));
    }
    Ok(2f64.sqrt() * PI.powf(-0.5 / p) * (ln_gamma(0.5 * (p + 1.0)) / p).exp())
}

/// `∫ |ℓ_a|^p dμ_h = (2h)^{p/2} π^{−1/2} Γ((p+1)/2) |a|^p`.
pub fn abs_moment(norm_a: f64, p: f64, h: f64) -> Result<f64> {
    if !(norm_a >= 0.0) || !norm_a.is_finite() {
        return invalid(format!("|a| must be finite and nonnegative, got {norm_a}"));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return invalid(format!("moment order must be ≥ 1, got {p}"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return invalid(format!("variance must be positive, got {h}"));
    }
    if norm_a == 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * h).powf(0.5 * p) / PI.sqrt() * libm::tgamma(0.5 * (p + 1.0)) * norm_a.powf(p))
}

/// `∫ e^{ℓ_u + iℓ_v} dμ_h = e^{h a²/2}` with `a² = |u|² − |v|² + 2i⟨u,v⟩`.
pub fn exp_moment(u: &HVector, v: &HVector, h: f64) -> Result<Complex64> {
    check_dims("exp_moment", u.dim(), v.dim())?;
    if !(h > 0.0) {
        return invalid(format!("variance must be positive, got {h}"));
    }
    let a2 = Complex64::new(u.norm_sq() - v.norm_sq(), 2.0 * u.dot(v));
    Ok((0.5 * h * a2).exp())
}

/// `e^{h|b|²/2} ∫_ℝ |√h |a| v + h ⟨a,b⟩|^p dμ_{ℝ,1}(v)`, which equals
/// `∫ e^{ℓ_b} |ℓ_a|^p dμ_h`.
pub fn mixed_moment_rhs(norm_a: f64, dot_ab: f64, norm_b: f64, p: f64, h: f64) -> Result<f64> {
    if !(norm_a >= 0.0 && norm_b >= 0.0) {
        return invalid("norms must be nonnegative");
    }
    if dot_ab.abs() > norm_a * norm_b * (1.0 + 1e-12) + 1e-300 {
        return invalid(format!(
            "|⟨a,b⟩| = {} exceeds |a||b| = {}",
            dot_ab.abs(),
            norm_a * norm_b
        ));
    }
    if !(p >= 1.0) || !(h > 0.0) {
        return invalid("need p ≥ 1 and h > 0");
    }
    let scale = (0.5 * h * norm_b * norm_b).exp();
    if norm_a == 0.0 {
        return Ok(0.0);
    }
    let s = h.sqrt() * norm_a;
    let c = h * dot_ab;
    let kink = -c / s;
    let r = gaussian_expectation_kinked(|v| (s * v + c).abs().powf(p), &[kink], 1e-12)?;
    Ok(scale * r.value)
}

/// `∫ y^{2p} dμ_{ℝ,1} = π^{−1/2} 2^p Γ(p + 1/2)`.
pub fn central_moment_even(p: u32) -> f64 {
    2f64.powi(p as i32) * libm::tgamma(p as f64 + 0.5) / PI.sqrt()
}

/// `(n−1)!!` for even `n`; the number of pairings of `n` points.
pub fn double_factorial_odd(p: u32) -> u64 {
    (1..=p as u64).map(|k| 2 * k - 1).product()
}

/// A pair partition of `{1, …, 2p}` with each pair `(i, j)`, `i < j`, and
/// pairs sorted by their first element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pairs: ArrayVec<(u8, u8), 8>,
}

impl Pairing {
    pub fn new(pairs: &[(u8, u8)]) -> Result<Self> {
        if pairs.len() > 8 {
            return invalid("at most 8 pairs are supported");
        }
        let n = 2 * pairs.len();
        let mut seen = vec![false; n + 1];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if !(1 <= i && i < j && (j as usize) <= n) {
                return invalid(format!("pair ({i}, {j}) is not ordered within 1..={n}"));
            }
            if k > 0 && pairs[k - 1].0 >= i {
                return invalid("pairs must be sorted by strictly increasing first element");
            }
            for idx in [i, j] {
                if seen[idx as usize] {
                    return invalid(format!("index {idx} appears twice"));
                }
                seen[idx as usize] = true;
            }
        }
        Ok(Pairing { pairs: pairs.iter().copied().collect() })
    }

    pub fn pairs(&self) -> &[(u8, u8)] {
        &self.pairs
    }
}

/// All pairings of `{1, …, two_p}`, built by pairing the smallest free index
/// with each larger free index in turn.
pub fn enumerate_pairings(two_p: usize) -> Result<Vec<Pairing>> {
    if !(2..=MAX_WICK_VECTORS).contains(&two_p) || two_p % 2 == 1 {
        return invalid(format!(
            "pairings need an even count in 2..={MAX_WICK_VECTORS}, got {two_p}"
        ));
    }
    fn rec(free: &mut Vec<u8>, cur: &mut ArrayVec<(u8, u8), 8>, out: &mut Vec<Pairing>) {
        if free.is_empty() {
            out.push(Pairing { pairs: cur.clone() });
            return;
        }
        let first = free.remove(0);
        for k in 0..free.len() {
            let partner = free.remove(k);
            cur.push((first, partner));
            rec(free, cur, out);
            cur.pop();
            free.insert(k, partner);
        }
        free.insert(0, first);
    }
    let mut out = Vec::new();
    let mut free: Vec<u8> = (1..=two_p as u8).collect();
    rec(&mut free, &mut ArrayVec::new(), &mut out);
    Ok(out)
}

fn hafnian(gram: &[Vec<f64>], free: &mut Vec<usize>) -> f64 {
    if free.is_empty() {
        return 1.0;
    }
    let first = free.remove(0);
    let mut total = 0.0;
    for k in 0..free.len() {
        let partner = free.remove(k);
        let g = gram[first][partner];
        if g != 0.0 {
            total += g * hafnian(gram, free);
        }
        free.insert(k, partner);
    }
    free.insert(0, first);
    total
}

/// `∫ Π_i ℓ_{u_i} dμ_h = h^p Σ_{pairings} Π_j ⟨u_{φ(j)}, u_{ψ(j)}⟩` for `2p`
/// vectors.
pub fn wick_integral(vectors: &[HVector], h: f64) -> Result<f64> {
    let n = vectors.len();
    if n == 0 || n % 2 == 1 {
        return invalid(format!("Wick sum needs an even, positive number of vectors, got {n}"));
    }
    wick_moment(vectors, h)
}

/// Like [`wick_integral`], but returns 0 for an odd number of vectors and 1
/// for none.
pub fn wick_moment(vectors: &[HVector], h: f64) -> Result<f64> {
    let n = vectors.len();
    if n > MAX_WICK_VECTORS {
        return invalid(format!("at most {MAX_WICK_VECTORS} vectors are supported, got {n}"));
    }
    if !(h > 0.0) {
        return invalid(format!("variance must be positive, got {h}"));
    }
    if let Some(v) = vectors.first() {
        for w in vectors {
            check_dims("wick_integral", v.dim(), w.dim())?;
        }
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let gram: Vec<Vec<f64>> =
        vectors.iter().map(|u| vectors.iter().map(|w| dot(u, w)).collect()).collect();
    let mut free: Vec<usize> = (0..n).collect();
    Ok(h.powi((n / 2) as i32) * hafnian(&gram, &mut free))
}

/// `E Π_i Y_{idx[i]}` for `Y ~ N(0, h·gram)`; `None` beyond the pairing
/// guard.
pub(crate) fn gram_moment(gram: &[Vec<f64>], idx: &[usize], h: f64) -> Option<f64> {
    let n = idx.len();
    if n > MAX_WICK_VECTORS {
        return None;
    }
    if n % 2 == 1 {
        return Some(0.0);
    }
    let sub: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| gram[i][j]).collect()).collect();
    let mut free: Vec<usize> = (0..n).collect();
    Some(h.powi((n / 2) as i32) * hafnian(&sub, &mut free))
}

/// Monte Carlo residual of the translation identity
/// `∫ g dμ_h = e^{−|a|²/(2h)} ∫ g(x+a) e^{−ℓ_a(x)/h} dμ_h(x)`, estimated
/// with paired samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationResidual {
    pub residual: f64,
    pub stderr: f64,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn translation_identity_residual(
    g: &dyn Symbol,
    a: &HVector,
    h: f64,
    batch: &SampleBatch,
) -> Result<TranslationResidual> {
    check_dims("translation", batch.dim(), a.dim())?;
    check_dims("translation", batch.dim(), g.dim())?;
    if (batch.spec.variance - h).abs() > 1e-15 * h {
        return invalid("sample batch variance differs from h");
    }
    let pre = (-0.5 * a.norm_sq() / h).exp();
    let est = batch.means(6, |x, out| {
        let lhs = g.eval(x);
        let shifted: Vec<f64> = x.iter().zip(a.iter()).map(|(xi, ai)| xi + ai).collect();
        let rhs = g.eval(&shifted) * (pre * (-dot(a, x) / h).exp());
        let d = lhs - rhs;
        out.copy_from_slice(&[d.re, d.im, lhs.re, lhs.im, rhs.re, rhs.im]);
    })?;
    let residual = Complex64::new(est[0].value, est[1].value).norm();
    if !residual.is_finite() {
        return Err(LabError::NumericalOverflow("translation residual is not finite".into()));
    }
    Ok(TranslationResidual {
        residual,
        stderr: est[0].stderr.hypot(est[1].stderr),
        lhs: Complex64::new(est[2].value, est[3].value).norm(),
        rhs: Complex64::new(est[4].value, est[5].value).norm(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// `‖Π f_i − Π g_i‖_p`
    pub lhs: f64,
    /// `Σ_k Π_{i<k} ‖f_i‖_{pN} Π_{i>k} ‖g_i‖_{pN} ‖f_k − g_k‖_{pN}`
    pub rhs: f64,
    /// `M^{N−1} Σ_k ‖f_k − g_k‖_{pN}` with `M` the largest of all the norms.
    pub coarse_rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

fn weighted_norm(w: &[f64], f: impl Fn(usize) -> f64, r: f64) -> f64 {
    w.iter()
        .enumerate()
        .map(|(k, wk)| wk * f(k).abs().powf(r))
        .sum::<f64>()
        .powf(1.0 / r)
}

/// Evaluates both sides of the Hölder telescoping inequality on a finite
/// weighted space.
pub fn holder_telescoping_check(
    f_list: &[Vec<f64>],
    g_list: &[Vec<f64>],
    p: f64,
    weights: &[f64],
) -> Result<HolderReport> {
    let n = f_list.len();
    if n == 0 || g_list.len() != n {
        return invalid("f and g lists must be nonempty and of equal length");
    }
    if !(p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    let m = weights.len();
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid("weights must be a probability vector");
    }
    for arr in f_list.iter().chain(g_list) {
        check_dims("holder_telescoping_check", m, arr.len())?;
    }
    let pn = p * n as f64;
    let prod = |list: &[Vec<f64>], k: usize| list.iter().map(|v| v[k]).product::<f64>();
    let lhs = weighted_norm(weights, |k| prod(f_list, k) - prod(g_list, k), p);
    let fnorm: Vec<f64> = f_list.iter().map(|f| weighted_norm(weights, |k| f[k], pn)).collect();
    let gnorm: Vec<f64> = g_list.iter().map(|g| weighted_norm(weights, |k| g[k], pn)).collect();
    let dnorm: Vec<f64> = f_list
        .iter()
        .zip(g_list)
        .map(|(f, g)| weighted_norm(weights, |k| f[k] - g[k], pn))
        .collect();
    let rhs: f64 = (0..n)
        .map(|k| {
            fnorm[..k].iter().product::<f64>() * gnorm[k + 1..].iter().product::<f64>() * dnorm[k]
        })
        .sum();
    let big = fnorm.iter().chain(&gnorm).cloned().fold(0.0, f64::max);
    let coarse_rhs = big.powi(n as i32 - 1) * dnorm.iter().sum::<f64>();
    let tol = 1e-12 * (1.0 + rhs);
    Ok(HolderReport { lhs, rhs, coarse_rhs, slack: rhs - lhs, pass: lhs <= rhs + tol })
}
