//! Executes an [`ExperimentConfig`], writes per-check reports and the
//! manifest.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;
use wienerlab::extension::{qa_rate_check, sm_rate_check, McSetup, SubspaceChain};
use wienerlab::heat::{
    commutation_residual, covariance_residual, expansion_check, generator_residual, heat_rows_csv,
    semigroup_residual, DerivativeMode, HeatMethod, HeatRow,
};
use wienerlab::hilbert::random_orthogonal;
use wienerlab::sampling::{derive_seed, McPlan};
use wienerlab::symbols::SymbolRef;

use crate::config::{ExperimentConfig, Operation};
use crate::output::{flag, num, write_checks, CheckOutput, RunManifest, Table};
use crate::suite;

fn method(cfg: &ExperimentConfig) -> HeatMethod {
    HeatMethod::quadrature(cfg.method.quad_order)
}

fn setup(cfg: &ExperimentConfig, tag: &str) -> McSetup {
    McSetup::new(
        cfg.h,
        McPlan { initial: cfg.method.mc_samples, cap: cfg.method.mc_cap, rel_target: 0.02 },
        derive_seed(cfg.seed, tag),
    )
}

fn symbols(cfg: &ExperimentConfig) -> Result<Vec<(String, SymbolRef)>> {
    let s = cfg.build_symbols()?;
    if s.is_empty() {
        bail!("config-invalid: field `symbols`: operation {} needs at least one symbol", cfg.operation.name());
    }
    Ok(s)
}

fn renamed(mut c: CheckOutput, name: &str) -> CheckOutput {
    c.name = name.to_string();
    c
}

fn constants(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    Ok(vec![renamed(suite::constants_check(&cfg.p_grid)?, "constants")])
}

fn wick(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    let ps: Vec<usize> = cfg
        .p_grid
        .iter()
        .map(|&p| {
            if p.fract() != 0.0 || p > 8.0 {
                bail!("config-invalid: field `p_grid`: Wick orders must be integers in 1..=8, got {p}");
            }
            Ok(p as usize)
        })
        .collect::<Result<_>>()?;
    Ok(vec![renamed(suite::wick_check(cfg.seed, cfg.dim, &ps, cfg.method.mc_samples)?, "wick")])
}

fn moments(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    Ok(vec![renamed(suite::moments_check(cfg.seed, cfg.dim, 20, &cfg.p_grid, cfg.method.mc_samples)?, "moments")])
}

fn extend(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    let chain = match &cfg.chain {
        Some(c) => c.build(cfg.dim)?,
        None => SubspaceChain::coordinate(cfg.dim, &SubspaceChain::even_dims(cfg.dim, 8.min(cfg.dim)))?,
    };
    let mut out = Vec::new();
    for (name, f) in symbols(cfg)? {
        let claims = f.claims();
        if claims.smeps.is_none() && claims.qa.is_none() {
            log::warn!("{name} carries no class claim; skipped");
            continue;
        }
        let mut table = Table::new(&["experiment", "exponent", "step", "n", "lhs", "stderr", "rhs", "pass"]);
        let mut pass = true;
        if claims.smeps.is_some() {
            for &q in &cfg.q_grid {
                let r = sm_rate_check(f.as_ref(), &chain, q, &setup(cfg, &format!("{name}-sm-{q}")))?;
                pass &= r.pass();
                for rep in [&r.direct, &r.cauchy] {
                    table.extend_csv(&[rep.experiment.clone(), num(q)], &rep.to_csv());
                }
            }
        }
        if claims.qa.is_some() {
            for &p in &cfg.p_grid {
                let r = qa_rate_check(f.as_ref(), &chain, p, &setup(cfg, &format!("{name}-qa-{p}")))?;
                pass &= r.pass();
                table.extend_csv(&[r.experiment.clone(), num(p)], &r.to_csv());
            }
        }
        let failed = table.rows.iter().filter(|r| r[7] == "false").count();
        out.push(CheckOutput {
            name: format!("extend-{name}"),
            pass,
            detail: format!("{} steps, {failed} above bound + 3σ", table.rows.len()),
            table,
        });
    }
    Ok(out)
}

fn heat(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    let m = method(cfg);
    let x = vec![0.1; cfg.dim];
    let phi = random_orthogonal(cfg.dim, derive_seed(cfg.seed, "heat-rotation"))?;
    let mut out = Vec::new();
    for (name, f) in symbols(cfg)? {
        let rows: Vec<Vec<HeatRow>> = cfg
            .t_grid
            .par_iter()
            .map(|&t| {
                let mut rows = Vec::new();
                let row = |experiment: &str, s: f64, residual: f64, bound: f64| HeatRow {
                    experiment: experiment.into(),
                    symbol: name.clone(),
                    t,
                    s,
                    residual,
                    bound,
                    pass: residual <= bound,
                };
                for &s in &cfg.s_grid {
                    let r = semigroup_residual(f.clone(), &x, s, t, &m)?;
                    rows.push(row("semigroup", s, r.residual, 1e-7));
                }
                let r = commutation_residual(f.clone(), &x, t, DerivativeMode::Analytic, &m)?;
                rows.push(row("commutation", 0.0, r.residual, 1e-6));
                let r = commutation_residual(f.clone(), &x, t, DerivativeMode::FiniteDifference, &m)?;
                rows.push(row("commutation-fd", 0.0, r.residual, 1e-4));
                let r = covariance_residual(f.clone(), &phi, &x, t, &m)?;
                rows.push(row("covariance", 0.0, r.residual, 1e-8));
                if let Some(q) = f.claims().qa {
                    let delta = 1e-3;
                    let r = generator_residual(f.clone(), &x, t, delta, &m)?;
                    let bound = delta / 8.0 * q.op.trace().powi(2) * q.norm + 3.0 * r.error;
                    rows.push(row("generator", delta, r.residual, bound));
                }
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        let rows: Vec<HeatRow> = rows.into_iter().flatten().collect();
        let pass = rows.iter().all(|r| r.pass);
        let failed = rows.iter().filter(|r| !r.pass).count();
        let mut table = Table::new(&["experiment", "symbol", "t", "s", "residual", "bound", "pass"]);
        table.extend_csv(&[], &heat_rows_csv(&rows));
        out.push(CheckOutput {
            name: format!("heat-{name}"),
            pass,
            detail: format!("{} residuals, {failed} above tolerance", rows.len()),
            table,
        });
    }
    Ok(out)
}

fn expand(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    let m = method(cfg);
    let x = vec![0.3; cfg.dim];
    let mut out = Vec::new();
    for (name, f) in symbols(cfg)? {
        let r = expansion_check(f, &x, &cfg.t_grid, cfg.order, &m)?;
        let mut table = Table::new(&["t", "residual", "method_error", "qa_bound", "sm_bound", "pass"]);
        for row in &r.rows {
            table.push(vec![
                num(row.t),
                num(row.residual),
                num(row.method_error),
                num(row.qa_bound.unwrap_or(f64::INFINITY)),
                num(row.sm_bound.unwrap_or(f64::INFINITY)),
                flag(row.pass),
            ]);
        }
        let slope = r.slope.map_or("none".to_string(), |s| format!("{s:.4}"));
        out.push(CheckOutput {
            name: format!("expand-{name}"),
            pass: r.pass(),
            detail: format!("N = {}, observed order {slope}", r.n),
            table,
        });
    }
    Ok(out)
}

/// Criteria 1 to 15, then a full rerun compared byte for byte.
pub fn verify_all(seed: u64) -> Result<Vec<CheckOutput>> {
    let mut first = suite::run_all(seed)?;
    let second = suite::run_all(seed)?;
    let det = suite::determinism_check(&first, &second);
    first.push(det);
    Ok(first)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<CheckOutput>> {
    match cfg.operation {
        Operation::Constants => constants(cfg),
        Operation::Wick => wick(cfg),
        Operation::Moments => moments(cfg),
        Operation::Extend => extend(cfg),
        Operation::Heat => heat(cfg),
        Operation::Expand => expand(cfg),
        Operation::VerifyAll => verify_all(cfg.seed),
    }
}

/// Runs the configured checks, writes `<check>.csv`, `<check>.json`,
/// `manifest.json` and `timings.json` into `out`, and returns the manifest.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let checks = execute(cfg).with_context(|| format!("running {}", cfg.id))?;
    let elapsed = start.elapsed().as_secs_f64();
    let summaries = write_checks(out, &checks)?;
    let manifest = RunManifest {
        config_id: cfg.id.clone(),
        operation: cfg.operation.name().into(),
        config_hash: cfg.hash(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        pass: checks.iter().all(|c| c.pass),
        checks: summaries,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    std::fs::write(
        out.join("timings.json"),
        serde_json::to_string_pretty(&json!({ "total_seconds": elapsed }))?,
    )?;
    Ok(manifest)
}
