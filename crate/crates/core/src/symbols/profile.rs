//! Profiles `g: ℝ^k → ℂ` with exact partial derivatives.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64;

use crate::gaussian::gram_moment;

pub type Gram = Vec<Vec<f64>>;

pub trait Profile: Send + Sync + Debug {
    fn arity(&self) -> usize;

    /// `∂^{counts} g(s)`, where `counts[r]` is the number of derivatives
    /// taken in slot `r`.
    fn partial(&self, s: &[f64], counts: &[usize]) -> Complex64;

    fn value(&self, s: &[f64]) -> Complex64 {
        self.partial(s, &vec![0; self.arity()])
    }

    /// Highest total derivative order available.
    fn max_order(&self) -> usize {
        usize::MAX
    }

    /// `s ↦ E g(s + Y)` with `Y ~ N(0, t·gram)`, when it has a closed form.
    fn heat(&self, _t: f64, _gram: &Gram) -> Option<Arc<dyn Profile>> {
        None
    }

    /// `Σ_{r,s} gram[r][s] ∂_r ∂_s g`, when a closed form in the same
    /// family exists.
    fn laplacian(&self, _gram: &Gram) -> Option<Arc<dyn Profile>> {
        None
    }

    fn label(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrigKind {
    /// `c·cos(s + θ)`
    Cos,
    /// `c·e^{i(s + θ)}`
    ExpI,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigProfile {
    pub kind: TrigKind,
    pub amplitude: f64,
    pub phase: f64,
}

impl Profile for TrigProfile {
    fn arity(&self) -> usize {
        1
    }

    fn partial(&self, s: &[f64], counts: &[usize]) -> Complex64 {
        let n = counts[0];
        let arg = s[0] + self.phase;
        let c = self.amplitude;
        match self.kind {
            TrigKind::Cos => {
                let v = match n % 4 {
                    0 => arg.cos(),
                    1 => -arg.sin(),
                    2 => -arg.cos(),
                    _ => arg.sin(),
                };
                Complex64::new(c * v, 0.0)
            }
            TrigKind::ExpI => {
                let i_pow = match n % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                };
                c * i_pow * Complex64::new(arg.cos(), arg.sin())
            }
        }
    }

    fn heat(&self, t: f64, gram: &Gram) -> Option<Arc<dyn Profile>> {
        Some(Arc::new(TrigProfile {
            amplitude: self.amplitude * (-0.5 * t * gram[0][0]).exp(),
            ..self.clone()
        }))
    }

    fn laplacian(&self, gram: &Gram) -> Option<Arc<dyn Profile>> {
        Some(Arc::new(TrigProfile { amplitude: -self.amplitude * gram[0][0], ..self.clone() }))
    }

    fn label(&self) -> String {
        match self.kind {
            TrigKind::Cos => format!("{}*cos(s+{})", self.amplitude, self.phase),
            TrigKind::ExpI => format!("{}*exp(i(s+{}))", self.amplitude, self.phase),
        }
    }
}

/// `Σ_terms c · Π_r s_r^{e_r}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialProfile {
    arity: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl PolynomialProfile {
    pub fn new(arity: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        assert!(terms.iter().all(|(_, e)| e.len() == arity), "exponent length must equal arity");
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, e) in terms {
            *merged.entry(e).or_insert(0.0) += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| *c != 0.0).map(|(e, c)| (c, e)).collect();
        PolynomialProfile { arity, terms }
    }

    pub fn monomial(exps: Vec<u32>) -> Self {
        Self::new(exps.len(), vec![(1.0, exps)])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(0, vec![(c, vec![])])
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }
}

fn falling(e: u32, n: usize) -> f64 {
    (0..n as u32).map(|i| (e - i) as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

impl Profile for PolynomialProfile {
    fn arity(&self) -> usize {
        self.arity
    }

    fn partial(&self, s: &[f64], counts: &[usize]) -> Complex64 {
        let mut total = 0.0;
        'terms: for (c, e) in &self.terms {
            let mut v = *c;
            for r in 0..self.arity {
                if counts[r] as u32 > e[r] {
                    continue 'terms;
                }
                v *= falling(e[r], counts[r]) * s[r].powi((e[r] - counts[r] as u32) as i32);
            }
            total += v;
        }
        Complex64::new(total, 0.0)
    }

    fn heat(&self, t: f64, gram: &Gram) -> Option<Arc<dyn Profile>> {
        let mut out = Vec::new();
        for (c, e) in &self.terms {
            // every k ≤ e componentwise
            let mut k = vec![0u32; self.arity];
            loop {
                let total: u32 = k.iter().sum();
                if total.is_multiple_of(2) {
                    let idx: Vec<usize> =
                        (0..self.arity).flat_map(|r| std::iter::repeat_n(r, k[r] as usize)).collect();
                    let moment = gram_moment(gram, &idx, t)?;
                    let binom: f64 = (0..self.arity).map(|r| binomial(e[r], k[r])).product();
                    let rest: Vec<u32> = e.iter().zip(&k).map(|(a, b)| a - b).collect();
                    out.push((c * binom * moment, rest));
                }
                let mut r = 0;
                loop {
                    if r == self.arity {
                        break;
                    }
                    if k[r] < e[r] {
                        k[r] += 1;
                        break;
                    }
                    k[r] = 0;
                    r += 1;
                }
                if r == self.arity {
                    break;
                }
            }
        }
        Some(Arc::new(PolynomialProfile::new(self.arity, out)))
    }

    fn laplacian(&self, gram: &Gram) -> Option<Arc<dyn Profile>> {
        let mut out = Vec::new();
        for (c, e) in &self.terms {
            for r in 0..self.arity {
                for q in 0..self.arity {
                    let g = gram[r][q];
                    if g == 0.0 || e[r] == 0 {
                        continue;
                    }
                    let mut d = e.clone();
                    let mut coeff = c * g * d[r] as f64;
                    d[r] -= 1;
                    if d[q] == 0 {
                        continue;
                    }
                    coeff *= d[q] as f64;
                    d[q] -= 1;
                    out.push((coeff, d));
                }
            }
        }
        Some(Arc::new(PolynomialProfile::new(self.arity, out)))
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, e)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0)
                    .map(|(r, p)| if *p == 1 { format!("s{r}") } else { format!("s{r}^{p}") })
                    .collect();
                if mono.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}*{}", mono.join("*"))
                }
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

/// `A · Π_r exp(−c_r s_r² / 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BellProfile {
    pub amplitude: f64,
    pub curvatures: Vec<f64>,
}

// probabilists' Hermite polynomial He_n(y)
fn hermite_he(n: usize, y: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = y * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl Profile for BellProfile {
    fn arity(&self) -> usize {
        self.curvatures.len()
    }

    fn partial(&self, s: &[f64], counts: &[usize]) -> Complex64 {
        let mut v = self.amplitude;
        for (r, &c) in self.curvatures.iter().enumerate() {
            let rc = c.sqrt();
            let n = counts[r];
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            v *= sign * rc.powi(n as i32) * hermite_he(n, rc * s[r]) * (-0.5 * c * s[r] * s[r]).exp();
        }
        Complex64::new(v, 0.0)
    }

    fn heat(&self, t: f64, gram: &Gram) -> Option<Arc<dyn Profile>> {
        let k = self.arity();
        for r in 0..k {
            for q in 0..k {
                if r != q && gram[r][q].abs() > 1e-14 * (gram[r][r] * gram[q][q]).sqrt() {
                    return None;
                }
            }
        }
        let mut amplitude = self.amplitude;
        let curvatures = self
            .curvatures
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                let d = 1.0 + c * t * gram[r][r];
                amplitude /= d.sqrt();
                c / d
            })
            .collect();
        Some(Arc::new(BellProfile { amplitude, curvatures }))
    }

    fn label(&self) -> String {
        format!("{}*bell{:?}", self.amplitude, self.curvatures)
    }
}

/// `Σ_{r,q} gram[r][q] ∂_r ∂_q g` for an arbitrary inner profile.
#[derive(Debug)]
pub struct LaplacianProfile {
    pub inner: Arc<dyn Profile>,
    pub gram: Gram,
}

impl Profile for LaplacianProfile {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn partial(&self, s: &[f64], counts: &[usize]) -> Complex64 {
        let k = self.arity();
        let mut c = counts.to_vec();
        let mut total = Complex64::new(0.0, 0.0);
        for r in 0..k {
            for q in 0..k {
                let g = self.gram[r][q];
                if g == 0.0 {
                    continue;
                }
                c[r] += 1;
                c[q] += 1;
                total += g * self.inner.partial(s, &c);
                c[r] -= 1;
                c[q] -= 1;
            }
        }
        total
    }

    fn max_order(&self) -> usize {
        self.inner.max_order().saturating_sub(2)
    }

    fn label(&self) -> String {
        format!("lap({})", self.inner.label())
    }
}
