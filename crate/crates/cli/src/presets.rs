//! Default symbols, frames and grids shared by the subcommands and the
//! verification suite.

use std::sync::Arc;

use wienerlab::hilbert::{EpsilonSequence, HVector, OrthonormalFrame, TraceClassOperator};
use wienerlab::symbols::{exp_i, gaussian_bell, trig, PolyScalarSymbol, ProductSymbol, SymbolRef};
use wienerlab::Result;

pub const DIM: usize = 32;
pub const T_GRID: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];
pub const H: f64 = 1.0;

/// `(first · ratio^j)_{j < dim}`.
pub fn geometric(dim: usize, first: f64, ratio: f64) -> Vec<f64> {
    (0..dim).map(|j| first * ratio.powi(j as i32)).collect()
}

/// `ε_j = 2^{−j}`.
pub fn eps(dim: usize) -> Result<EpsilonSequence> {
    EpsilonSequence::geometric(dim, 1.0, 0.5)
}

/// Phase-space frame when `dim` is even, canonical otherwise.
pub fn frame(dim: usize) -> Result<OrthonormalFrame> {
    if dim.is_multiple_of(2) {
        OrthonormalFrame::phase_space(dim / 2)
    } else {
        OrthonormalFrame::canonical(dim)
    }
}

/// `λ_j = 2^{−j}` on the canonical frame.
pub fn lambda_operator(dim: usize) -> Result<TraceClassOperator> {
    TraceClassOperator::diagonal(&geometric(dim, 1.0, 0.5))
}

/// Diagonal operator with the first `rank` weights `2^{−j}`.
pub fn low_rank_operator(dim: usize, rank: usize) -> Result<TraceClassOperator> {
    TraceClassOperator::new(dim, geometric(rank, 1.0, 0.5), (0..rank).map(|j| HVector::basis(dim, j)).collect())
}

/// Named stock symbols on `ℝ^dim`.
pub fn stock_symbols(dim: usize) -> Result<Vec<(String, SymbolRef)>> {
    let frame = frame(dim)?;
    let eps = eps(dim)?;
    let geo = HVector::new(geometric(dim, 1.0, 0.5))?;
    let half = HVector::new(geometric(dim, 0.5, 0.5))?;
    let second = HVector::basis(dim, 1.min(dim - 1)).scaled(0.6);
    let op = lambda_operator(dim)?;
    Ok(vec![
        ("trig".into(), Arc::new(trig(geo.clone(), 0.3, 1.0).with_trig_sm_claim(1, &frame, &eps)?) as SymbolRef),
        ("exp-i".into(), Arc::new(exp_i(half.clone(), 1.0).with_trig_sm_claim(1, &frame, &eps)?)),
        (
            "trig-op".into(),
            Arc::new(trig(HVector::new(geometric(dim, 0.7, 0.5))?, 0.0, 1.0).with_trig_operator(&op)?),
        ),
        ("bell".into(), Arc::new(gaussian_bell(&low_rank_operator(dim, 3.min(dim))?, 1.0))),
        ("poly".into(), Arc::new(PolyScalarSymbol::new(vec![half.clone(), second.clone()], vec![2, 1])?)),
        (
            "product".into(),
            Arc::new(ProductSymbol::new(vec![Arc::new(trig(half, 0.0, 1.0)), Arc::new(trig(second, 0.4, 1.0))])?),
        ),
    ])
}

/// Stock symbols that carry a claim, for the extension experiments.
pub fn claimed_symbols(dim: usize) -> Result<Vec<(String, SymbolRef)>> {
    Ok(stock_symbols(dim)?
        .into_iter()
        .filter(|(_, f)| {
            let c = f.claims();
            c.qa.is_some() || c.smeps.is_some()
        })
        .collect())
}
