//! Constants `K(p)`, `C(p)` and `α(p)` entering the convergence-rate bounds.
//!
//! [`ConstantsTable`] recomputes `K(p)` through `Γ` directly rather than via
//! `ln Γ`, so that bounds evaluated inline and from the table come from two
//! independent routes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::k_constant;

/// Agreement required between inline and tabulated constants.
pub const TABLE_AGREEMENT_TOL: f64 = 1e-12;

/// `C(p)` and `α(p)` for an operator of trace `S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub p: f64,
    pub c: f64,
    pub alpha: f64,
}

/// `C(p) = 1, α(p) = 2` for `p ≤ 2`; `C(p) = K(p) S^{1/2 − 1/p}, α(p) = p` otherwise.
pub fn rate_constants(p: f64, trace: f64) -> Result<RateConstants> {
    if !(trace >= 0.0) {
        return invalid(format!("trace must be nonnegative, got {trace}"));
    }
    if p <= 2.0 {
        k_constant(p)?;
        Ok(RateConstants { p, c: 1.0, alpha: 2.0 })
    } else {
        Ok(RateConstants { p, c: k_constant(p)? * trace.powf(0.5 - 1.0 / p), alpha: p })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub p: f64,
    pub k: f64,
    pub c: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub trace: f64,
    pub rows: Vec<ConstantsRow>,
}

fn k_direct(p: f64) -> f64 {
    std::f64::consts::SQRT_2
        * std::f64::consts::PI.powf(-0.5 / p)
        * libm::tgamma(0.5 * (p + 1.0)).powf(1.0 / p)
}

impl ConstantsTable {
    pub fn regenerate(ps: &[f64], trace: f64) -> Result<Self> {
        if !(trace >= 0.0) {
            return invalid(format!("trace must be nonnegative, got {trace}"));
        }
        let mut rows = Vec::with_capacity(ps.len());
        for &p in ps {
            if !(p >= 1.0) || !p.is_finite() {
                return invalid(format!("p must be at least 1, got {p}"));
            }
            let k = k_direct(p);
            let (c, alpha) = if p <= 2.0 { (1.0, 2.0) } else { (k * trace.powf(0.5 - 1.0 / p), p) };
            rows.push(ConstantsRow { p, k, c, alpha });
        }
        Ok(ConstantsTable { trace, rows })
    }

    pub fn lookup(&self, p: f64) -> Option<&ConstantsRow> {
        self.rows.iter().find(|r| r.p == p)
    }

    /// Largest relative disagreement with the inline computation.
    pub fn max_disagreement(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let inline = rate_constants(r.p, self.trace)?;
            let k = k_constant(r.p)?;
            for (a, b) in [(r.k, k), (r.c, inline.c), (r.alpha, inline.alpha)] {
                worst = worst.max(rel_diff(a, b));
            }
        }
        Ok(worst)
    }
}

/// `|a − b| / max(1, |a|, |b|)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_inline() {
        let t = ConstantsTable::regenerate(&[1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 12.0], 2.0).unwrap();
        assert!(t.max_disagreement().unwrap() < TABLE_AGREEMENT_TOL);
        assert!((t.lookup(2.0).unwrap().k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn branches() {
        let c = rate_constants(2.0, 5.0).unwrap();
        assert_eq!((c.c, c.alpha), (1.0, 2.0));
        let c = rate_constants(4.0, 16.0).unwrap();
        // K(4) = 3^{1/4}, S^{1/4} = 2
        assert!((c.c - 2.0 * 3f64.powf(0.25)).abs() < 1e-13);
        assert_eq!(c.alpha, 4.0);
        assert!(rate_constants(0.5, 1.0).is_err());
    }
}
