//! Quadrature against the standard Gaussian weight and on bounded intervals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, LabError, Result};
use crate::hilbert::{dot, HVector};

pub const MAX_GH_ORDER: usize = 512;
/// Upper bound on the number of nodes in a tensor grid.
pub const TENSOR_BUDGET: usize = 10_000_000;
/// Gram eigenvalues below this fraction of the largest one are pruned.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Gauss–Hermite rule for the probabilists' weight, `Σ w_i f(x_i) ≈ E f(Z)`
/// with `Z ~ N(0,1)`. Weights sum to one.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

// normalized probabilists' Hermite p_n(x), p_{n-1}(x)
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn build_hermite(n: usize) -> GaussHermite {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (pn, pm) = hermite_pair(n, *x);
            let d = (n as f64).sqrt() * pm;
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let step = pn / d;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -s;
        nodes[n - 1 - i] = s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (_, pm) = hermite_pair(n, x);
            let w = 1.0 / (n as f64 * pm * pm);
            if w.is_finite() {
                w
            } else {
                0.0
            }
        })
        .collect();
    for i in 0..n / 2 {
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    GaussHermite { nodes, weights }
}

/// Cached Gauss–Hermite rule of order `n` (Golub–Welsch nodes refined by
/// Newton iteration on the normalized recurrence).
pub fn gauss_hermite(n: usize) -> Result<Arc<GaussHermite>> {
    if n == 0 || n > MAX_GH_ORDER {
        return invalid(format!("Gauss–Hermite order must lie in 1..={MAX_GH_ORDER}, got {n}"));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache").get(&n) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build_hermite(n));
    cache.lock().expect("quadrature cache").insert(n, rule.clone());
    Ok(rule)
}

/// Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_GH_ORDER {
        return invalid(format!("Gauss–Legendre order must lie in 1..={MAX_GH_ORDER}, got {n}"));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let legendre = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        if n == 1 {
            return (x, 1.0);
        }
        for k in 1..n {
            let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, p0)
    };
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..6 {
            let (pn, pm) = legendre(*x);
            let d = n as f64 * (*x * pn - pm) / (*x * *x - 1.0);
            *x -= pn / d;
        }
        let (pn, pm) = legendre(*x);
        let d = n as f64 * (*x * pn - pm) / (*x * *x - 1.0);
        weights.push(2.0 / ((1.0 - *x * *x) * d * d));
    }
    Ok((
        nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights.iter().map(|w| 0.5 * w).collect(),
    ))
}

/// Adaptive Gauss–Hermite for smooth integrands: the order doubles from 8
/// until successive estimates agree to `rel_tol`, capped at 512.
pub fn gaussian_expectation(f: impl Fn(f64) -> f64, rel_tol: f64) -> Result<QuadResult> {
    let mut n = 8;
    let mut prev = gauss_hermite(n)?.expect(&f);
    loop {
        let next_n = 2 * n;
        if next_n > MAX_GH_ORDER {
            return Ok(QuadResult { value: prev, error: f64::NAN });
        }
        let cur = gauss_hermite(next_n)?.expect(&f);
        if !cur.is_finite() {
            return Err(LabError::NumericalOverflow("Gauss–Hermite sum is not finite".into()));
        }
        let err = (cur - prev).abs();
        if err <= rel_tol * cur.abs().max(f64::MIN_POSITIVE) || err == 0.0 {
            return Ok(QuadResult { value: cur, error: err });
        }
        prev = cur;
        n = next_n;
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * hw, ((k - g) * hw).abs())
}

/// Adaptive Gauss–Kronrod (7/15) on `[a, b]`.
pub fn integrate_interval(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    let mut segs = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..4000 {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(LabError::NumericalOverflow("integrand is not finite".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult { value: total, error: err });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(&f, l, h);
            segs.push((l, h, v, e));
        }
    }
    let total: f64 = segs.iter().map(|s| s.2).sum();
    let err: f64 = segs.iter().map(|s| s.3).sum();
    Ok(QuadResult { value: total, error: err })
}

const GAUSS_TAIL: f64 = 40.0;

/// `E f(Z)`, `Z ~ N(0,1)`, for integrands with kinks at `breakpoints`
/// (e.g. `|v + c|^p`). The real line is truncated to `[-40, 40]` around the
/// breakpoints and split at each of them.
pub fn gaussian_expectation_kinked(
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    rel_tol: f64,
) -> Result<QuadResult> {
    let dens = |v: f64| (-0.5 * v * v).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.abs() < GAUSS_TAIL)
        .collect();
    cuts.push(-GAUSS_TAIL);
    cuts.push(GAUSS_TAIL);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let r = integrate_interval(|v| f(v) * dens(v), w[0], w[1], 1e-300, rel_tol * 0.1)?;
        value += r.value;
        error += r.error;
    }
    Ok(QuadResult { value, error })
}

/// Orthonormal basis of `span(vectors)` from the eigendecomposition of the
/// Gram matrix. Directions whose Gram eigenvalue falls below
/// `λ_max / 1e12` are dropped.
pub fn orthonormal_support(vectors: &[HVector]) -> Vec<HVector> {
    let k = vectors.len();
    if k == 0 {
        return Vec::new();
    }
    let dim = vectors[0].dim();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&vectors[i], &vectors[j]));
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lmax == 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis: Vec<HVector> = Vec::new();
    for idx in order {
        let l = eig.eigenvalues[idx];
        if l * GRAM_CONDITION_LIMIT < lmax {
            if l > 1e-20 * lmax {
                log::warn!(
                    "pruning ill-conditioned direction (Gram eigenvalue {l:e}, largest {lmax:e})"
                );
            }
            continue;
        }
        let coeffs = eig.eigenvectors.column(idx);
        let mut b = vec![0.0; dim];
        for (c, v) in coeffs.iter().zip(vectors) {
            for (bi, vi) in b.iter_mut().zip(v.iter()) {
                *bi += c * vi;
            }
        }
        let n = crate::hilbert::norm(&b);
        // one Gram–Schmidt pass against earlier vectors to clean up drift
        for prev in &basis {
            let c = dot(&b, prev);
            for (bi, pi) in b.iter_mut().zip(prev.iter()) {
                *bi -= c * pi;
            }
        }
        let n2 = crate::hilbert::norm(&b);
        if n2 > 1e-8 * n {
            basis.push(HVector::from_vec(b.into_iter().map(|x| x / n2).collect()));
        }
    }
    basis
}

/// `E f(x + s Σ_j Z_j b_j)` with `Z ~ N(0, I_r)` on a tensor Gauss–Hermite grid
/// of the given order. `basis` must be orthonormal.
pub fn tensor_expectation(
    basis: &[HVector],
    order: usize,
    scale: f64,
    x: &[f64],
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
) -> Result<Complex64> {
    let r = basis.len();
    if r == 0 || scale == 0.0 {
        return Ok(f(x));
    }
    let size = (order as f64).powi(r as i32);
    if size > TENSOR_BUDGET as f64 {
        return Err(LabError::ResourceLimit(format!(
            "tensor grid of {order}^{r} nodes exceeds budget {TENSOR_BUDGET}"
        )));
    }
    let rule = gauss_hermite(order)?;
    let inner = order.pow(r as u32 - 1);
    let partial: Vec<Complex64> = (0..order)
        .into_par_iter()
        .map(|i0| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = vec![0usize; r];
            idx[0] = i0;
            let mut y = vec![0.0; x.len()];
            for _ in 0..inner {
                let mut w = 1.0;
                y.copy_from_slice(x);
                for (j, b) in basis.iter().enumerate() {
                    let z = scale * rule.nodes[idx[j]];
                    w *= rule.weights[idx[j]];
                    for (yi, bi) in y.iter_mut().zip(b.iter()) {
                        *yi += z * bi;
                    }
                }
                if w != 0.0 {
                    acc += w * f(&y);
                }
                for j in (1..r).rev() {
                    idx[j] += 1;
                    if idx[j] < order {
                        break;
                    }
                    idx[j] = 0;
                }
            }
            acc
        })
        .collect();
    let total: Complex64 = partial.iter().sum();
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(LabError::NumericalOverflow("tensor quadrature sum is not finite".into()));
    }
    Ok(total)
}

/// Result of an adaptive tensor quadrature.
#[derive(Clone, Copy, Debug)]
pub struct TensorResult {
    pub value: Complex64,
    pub error: f64,
    pub order: usize,
}

/// Doubles the per-axis order from 8 until successive estimates agree to
/// `rel_tol` or `max_order`/the node budget is reached.
pub fn adaptive_tensor_expectation(
    basis: &[HVector],
    scale: f64,
    x: &[f64],
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    max_order: usize,
    rel_tol: f64,
) -> Result<TensorResult> {
    let r = basis.len();
    if r == 0 || scale == 0.0 {
        return Ok(TensorResult { value: f(x), error: 0.0, order: 0 });
    }
    let max_order = max_order.clamp(1, MAX_GH_ORDER);
    let fits = |n: usize| (n as f64).powi(r as i32) <= TENSOR_BUDGET as f64;
    let mut n = 8.min(max_order);
    if !fits(n) {
        return Err(LabError::ResourceLimit(format!(
            "no tensor grid of dimension {r} fits the node budget"
        )));
    }
    let mut prev = tensor_expectation(basis, n, scale, x, f)?;
    let mut err = f64::INFINITY;
    while 2 * n <= max_order && fits(2 * n) {
        let cur = tensor_expectation(basis, 2 * n, scale, x, f)?;
        err = (cur - prev).norm();
        n *= 2;
        prev = cur;
        if err <= rel_tol * cur.norm().max(1.0) {
            break;
        }
    }
    if !err.is_finite() {
        err = prev.norm();
    }
    Ok(TensorResult { value: prev, error: err, order: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermite_moments_exact() {
        let rule = gauss_hermite(10).unwrap();
        let moments: [f64; 9] = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0];
        for (k, &m) in moments.iter().enumerate() {
            assert_abs_diff_eq!(rule.expect(|x| x.powi(k as i32)), m, epsilon = 1e-11 * m.max(1.0));
        }
    }

    #[test]
    fn large_orders_are_stable() {
        for n in [64, 256, 512] {
            let rule = gauss_hermite(n).unwrap();
            assert_abs_diff_eq!(rule.expect(|x| x * x), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(rule.expect(|x| x.cos()), (-0.5f64).exp(), epsilon = 1e-13);
        }
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(5).unwrap();
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert_abs_diff_eq!(s, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn kinked_absolute_moments() {
        let r = gaussian_expectation_kinked(|v| v.abs(), &[0.0], 1e-12).unwrap();
        assert_abs_diff_eq!(r.value, (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-12);
        let r = gaussian_expectation_kinked(|v| v.abs().powf(3.0), &[0.0], 1e-12).unwrap();
        assert_abs_diff_eq!(r.value, 2.0 * (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn tensor_grid_on_pruned_support() {
        let a = HVector::new(vec![1.0, 1.0, 0.0]).unwrap();
        let basis = orthonormal_support(&[a.clone(), a.scaled(2.0)]);
        assert_eq!(basis.len(), 1);
        let x = [0.3, -0.1, 2.0];
        let f = |y: &[f64]| Complex64::new(dot(&a, y).cos(), 0.0);
        let r = adaptive_tensor_expectation(&basis, 1.0, &x, &f, 128, 1e-14).unwrap();
        let exact = (-0.5 * a.norm_sq()).exp() * dot(&a, &x).cos();
        assert_abs_diff_eq!(r.value.re, exact, epsilon = 1e-13);
    }

    #[test]
    fn tensor_budget_enforced() {
        let basis: Vec<HVector> = (0..6).map(|j| HVector::basis(6, j)).collect();
        let f = |_: &[f64]| Complex64::new(1.0, 0.0);
        let err = tensor_expectation(&basis, 64, 1.0, &[0.0; 6], &f).unwrap_err();
        assert!(matches!(err, LabError::ResourceLimit(_)));
    }
}
