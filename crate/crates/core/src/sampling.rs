//! Seeded, sharded sampling of `μ_{ℝⁿ,h}` and Monte Carlo estimators.
//!
//! Rows are produced in shards of [`SHARD_ROWS`]. Shard `s` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(s)`, filling its rows in
//! row-major order with `√h · StandardNormal`. Shards are generated in
//! parallel and always combined in shard order, so every result depends on
//! `(dim, h, seed, count)` only, and a batch of `n` rows is a prefix of any
//! larger batch with the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

pub const SHARD_ROWS: usize = 4096;
/// Rows per delete-one-block jackknife group.
pub const JACKKNIFE_BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasureSpec {
    pub dim: usize,
    pub variance: f64,
}

impl GaussianMeasureSpec {
    pub fn new(dim: usize, variance: f64) -> Result<Self> {
        if dim == 0 {
            return invalid("Gaussian measure needs dimension at least 1");
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return invalid(format!("variance must be positive and finite, got {variance}"));
        }
        Ok(GaussianMeasureSpec { dim, variance })
    }
}

/// A reproducible batch of i.i.d. `N(0, h·I)` rows. Rows are regenerated on
/// demand shard by shard; [`SampleBatch::to_matrix`] materializes them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub spec: GaussianMeasureSpec,
    pub seed: u64,
    pub count: usize,
}

pub fn gaussian_sample(spec: GaussianMeasureSpec, seed: u64, count: usize) -> Result<SampleBatch> {
    if count == 0 {
        return invalid("sample count must be at least 1");
    }
    Ok(SampleBatch { spec, seed, count })
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn shard_count(&self) -> usize {
        self.count.div_ceil(SHARD_ROWS)
    }

    fn shard_len(&self, s: usize) -> usize {
        (self.count - s * SHARD_ROWS).min(SHARD_ROWS)
    }

    /// Row-major samples of shard `s`.
    pub fn shard(&self, s: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(s as u64);
        let sd = self.spec.variance.sqrt();
        (0..self.shard_len(s) * self.spec.dim)
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// All rows, row-major, `count × dim`.
    pub fn to_matrix(&self) -> Vec<f64> {
        (0..self.shard_count())
            .into_par_iter()
            .map(|s| self.shard(s))
            .collect::<Vec<_>>()
            .concat()
    }

    /// Applies `f` to each shard's rows in parallel; results come back in
    /// shard order.
    pub fn map_shards<T: Send>(&self, f: impl Fn(usize, &[f64]) -> T + Sync) -> Vec<T> {
        (0..self.shard_count())
            .into_par_iter()
            .map(|s| f(s, &self.shard(s)))
            .collect()
    }

    /// Per-shard sums of `k` statistics `g(row)`.
    pub fn shard_sums(
        &self,
        k: usize,
        g: impl Fn(&[f64], &mut [f64]) + Sync,
    ) -> Result<Vec<ShardSum>> {
        let dim = self.spec.dim;
        let sums = self.map_shards(|_, rows| {
            let mut acc = ShardSum::new(k);
            let mut buf = vec![0.0; k];
            for row in rows.chunks_exact(dim) {
                g(row, &mut buf);
                acc.push(&buf);
            }
            acc
        });
        if sums.iter().any(|s| s.sum.iter().chain(&s.sum_sq).any(|v| !v.is_finite())) {
            return Err(LabError::NumericalOverflow("Monte Carlo integrand is not finite".into()));
        }
        Ok(sums)
    }

    /// Sample mean of a scalar statistic.
    pub fn mean(&self, g: impl Fn(&[f64]) -> f64 + Sync) -> Result<Estimate> {
        let sums = self.shard_sums(1, |row, out| out[0] = g(row))?;
        Ok(ShardSum::combine(&sums, 1).estimate(0))
    }

    /// Sample means of `k` statistics evaluated jointly.
    pub fn means(&self, k: usize, g: impl Fn(&[f64], &mut [f64]) + Sync) -> Result<Vec<Estimate>> {
        let sums = self.shard_sums(k, g)?;
        let total = ShardSum::combine(&sums, k);
        Ok((0..k).map(|i| total.estimate(i)).collect())
    }

    /// `(E|g|^q)^{1/q}` with a delete-one-block jackknife standard error over
/// blocks of [`JACKKNIFE_BLOCK`] rows.
    pub fn lq_norm(&self, q: f64, g: impl Fn(&[f64]) -> f64 + Sync) -> Result<Estimate> {
        if !(q >= 1.0) {
            return invalid(format!("L^q exponent must be at least 1, got {q}"));
        }
        let dim = self.spec.dim;
        let blocks: Vec<ShardSum> = self
            .map_shards(|_, rows| {
                rows.chunks(JACKKNIFE_BLOCK * dim)
                    .map(|block| {
                        let mut acc = ShardSum::new(1);
                        for row in block.chunks_exact(dim) {
                            acc.push(&[g(row).abs().powf(q)]);
                        }
                        acc
                    })
                    .collect::<Vec<_>>()
            })
            .concat();
        if blocks.iter().any(|s| !s.sum[0].is_finite() || !s.sum_sq[0].is_finite()) {
            return Err(LabError::NumericalOverflow("Monte Carlo integrand is not finite".into()));
        }
        Ok(lq_from_sums(&blocks, q))
    }
}

/// Running sums over one shard.
#[derive(Clone, Debug, PartialEq)]
pub struct ShardSum {
    pub n: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl ShardSum {
    pub fn new(k: usize) -> Self {
        ShardSum { n: 0, sum: vec![0.0; k], sum_sq: vec![0.0; k] }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.n += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn combine(parts: &[ShardSum], k: usize) -> ShardSum {
        let mut out = ShardSum::new(k);
        for p in parts {
            out.n += p.n;
            for i in 0..k {
                out.sum[i] += p.sum[i];
                out.sum_sq[i] += p.sum_sq[i];
            }
        }
        out
    }

    /// Mean with standard error `sd / √n`.
    pub fn estimate(&self, i: usize) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum[i] / n;
        let var = if self.n > 1 {
            ((self.sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate { value: mean, stderr: (var / n).sqrt(), count: self.n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0, count: 0 }
    }

    /// `|value − target| ≤ k·stderr`, with a tiny absolute floor for
    /// rounding in degenerate zero-variance cases.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + 1e-12 * (1.0 + target.abs())
    }
}

fn lq_from_sums(sums: &[ShardSum], q: f64) -> Estimate {
    let total = ShardSum::combine(sums, 1);
    let n = total.n as f64;
    let m = total.sum[0] / n;
    let value = m.powf(1.0 / q);
    if m == 0.0 {
        return Estimate { value: 0.0, stderr: 0.0, count: total.n };
    }
    let g = sums.len();
    let stderr = if g >= 2 {
        let thetas: Vec<f64> = sums
            .iter()
            .map(|s| ((total.sum[0] - s.sum[0]) / (n - s.n as f64)).max(0.0).powf(1.0 / q))
            .collect();
        let mean = thetas.iter().sum::<f64>() / g as f64;
        let ss: f64 = thetas.iter().map(|t| (t - mean) * (t - mean)).sum();
        ((g as f64 - 1.0) / g as f64 * ss).sqrt()
    } else {
        let se_m = total.estimate(0).stderr;
        se_m * m.powf(1.0 / q - 1.0) / q
    };
    Estimate { value, stderr, count: total.n }
}

/// Sample-size schedule: start at `initial`, double until the standard
/// error drops below `rel_target · scale` or `cap` is reached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    pub initial: usize,
    pub cap: usize,
    pub rel_target: f64,
}

impl Default for McPlan {
    fn default() -> Self {
        McPlan { initial: 100_000, cap: 10_000_000, rel_target: 0.05 }
    }
}

impl McPlan {
    pub fn fixed(count: usize) -> Self {
        McPlan { initial: count, cap: count, rel_target: 0.0 }
    }

    /// Runs `estimate` on growing batches until the stopping rule holds.
    pub fn run(
        &self,
        spec: GaussianMeasureSpec,
        seed: u64,
        scale: f64,
        estimate: impl Fn(&SampleBatch) -> Result<Estimate>,
    ) -> Result<Estimate> {
        let mut count = self.initial.max(1);
        loop {
            let batch = gaussian_sample(spec, seed, count)?;
            let est = estimate(&batch)?;
            if est.stderr == 0.0 || est.stderr < self.rel_target * scale || count >= self.cap {
                return Ok(est);
            }
            count = (2 * count).min(self.cap);
        }
    }
}

/// Derives an independent seed for a named sub-experiment.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(seed ^ splitmix(h))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
