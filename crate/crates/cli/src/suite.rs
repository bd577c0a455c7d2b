//! The verification suite: one check per acceptance criterion, each with
//! its documented default configuration.

use std::sync::Arc;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wienerlab::constants::{ConstantsTable, TABLE_AGREEMENT_TOL};
use wienerlab::extension::{
    ext_prodscal_closed_form, derivative_extension_rate, gate, nm_bound_check, prodscal_rate_check,
    qa_projection_moment_check, qa_rate_check, sm_rate_check, ConvergenceReport, McSetup, SubspaceChain,
};
use wienerlab::gaussian::{
    abs_moment, double_factorial_odd, exp_moment, gaussian_sample, holder_telescoping_check, k_constant,
    mixed_moment_rhs, translation_identity_residual, wick_integral, GaussianMeasureSpec,
};
use wienerlab::heat::{
    commutation_residual, covariance_residual, expansion_check, generator_residual, heat_apply,
    multiplication_commutator_residual, semigroup_residual, DerivativeMode, HeatMethod,
};
use wienerlab::hilbert::{random_orthogonal, HVector, OrthonormalFrame, TraceClassOperator};
use wienerlab::quadrature::gaussian_expectation_kinked;
use wienerlab::sampling::{derive_seed, McPlan};
use wienerlab::symbols::{
    exp_i, gaussian_bell, laplacian, laplacian_in_basis, trig, CylindricalSymbol, PolyScalarSymbol, SymbolRef,
};

use crate::output::{flag, num, CheckOutput, Table};
use crate::presets;

pub struct Criterion {
    pub id: u8,
    pub slug: &'static str,
    pub title: &'static str,
}

pub const CRITERIA: [Criterion; 16] = [
    Criterion { id: 1, slug: "constants", title: "K(2) = 1 and absolute moments against quadrature" },
    Criterion { id: 2, slug: "wick", title: "Wick sums against Monte Carlo and unit copies" },
    Criterion { id: 3, slug: "moments", title: "exponential and mixed moment identities" },
    Criterion { id: 4, slug: "translation", title: "translation formula" },
    Criterion { id: 5, slug: "heat-closed-forms", title: "heat operator closed forms" },
    Criterion { id: 6, slug: "semigroup", title: "semigroup property" },
    Criterion { id: 7, slug: "commutation", title: "Laplacian commutes with the heat operator" },
    Criterion { id: 8, slug: "generator-expansion", title: "generator and heat expansion" },
    Criterion { id: 9, slug: "extension-rates", title: "extension rates along chains" },
    Criterion { id: 10, slug: "projection-derivative", title: "projection moments and derivative extension" },
    Criterion { id: 11, slug: "prodscal-nm", title: "scalar-product symbols and N_m bound" },
    Criterion { id: 12, slug: "covariance", title: "covariance under rotations" },
    Criterion { id: 13, slug: "multiplication-commutator", title: "multiplication commutator" },
    Criterion { id: 14, slug: "holder-telescoping", title: "telescoping Hölder inequality" },
    Criterion { id: 15, slug: "laplacian-basis", title: "basis independence of the Laplacian" },
    Criterion { id: 16, slug: "determinism", title: "byte-identical reruns" },
];

pub fn criterion(id: u8) -> &'static Criterion {
    &CRITERIA[id as usize - 1]
}

pub fn check_name(id: u8) -> String {
    format!("c{:02}-{}", id, criterion(id).slug)
}

fn rng(seed: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

/// A vector with uniformly random direction and norm in `[lo, hi]`.
fn random_vector(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> HVector {
    let v = HVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite");
    let r = rng.random_range(lo..=hi);
    v.scaled(r / v.norm().max(1e-300))
}

/// `n` standard Gaussian points of `ℝ^dim`.
fn gaussian_points(dim: usize, n: usize, seed: u64, tag: &str) -> Result<Vec<Vec<f64>>> {
    let b = gaussian_sample(GaussianMeasureSpec::new(dim, 1.0)?, derive_seed(seed, tag), n)?;
    Ok(b.to_matrix().chunks(dim).map(<[f64]>::to_vec).collect())
}

fn outcome(id: u8, pass: bool, detail: String, table: Table) -> CheckOutput {
    CheckOutput { name: check_name(id), pass, detail, table }
}

/// Runs criterion `id` (1 to 15) with the given seed.
pub fn run_criterion(id: u8, seed: u64) -> Result<CheckOutput> {
    match id {
        1 => constants_check(&[1.0, 2.0, 3.0, 4.0]),
        2 => wick_check(seed, 6, &[1, 2, 3], 1_000_000),
        3 => moments_check(seed, 8, 20, &[1.0, 2.0, 3.0, 4.0], 100_000),
        4 => c04_translation(seed),
        5 => c05_heat_closed_forms(seed),
        6 => c06_semigroup(seed),
        7 => c07_commutation(seed),
        8 => c08_generator_expansion(seed),
        9 => c09_extension_rates(seed),
        10 => c10_projection_derivative(seed),
        11 => c11_prodscal_nm(seed),
        12 => c12_covariance(seed),
        13 => c13_multiplication_commutator(seed),
        14 => c14_holder(seed),
        15 => c15_laplacian_basis(seed),
        _ => anyhow::bail!("criterion {id} is not a standalone check"),
    }
}

/// Runs criteria 1 to 15 in parallel; results are in criterion order.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutput>> {
    (1..=15u8).into_par_iter().map(|id| run_criterion(id, seed)).collect()
}

/// Compares the CSV renderings of two runs check by check.
pub fn determinism_check(first: &[CheckOutput], second: &[CheckOutput]) -> CheckOutput {
    let mut table = Table::new(&["check", "bytes", "identical"]);
    let mut pass = first.len() == second.len();
    for (a, b) in first.iter().zip(second) {
        let (ca, cb) = (a.table.to_csv(), b.table.to_csv());
        let same = a.name == b.name && ca == cb;
        pass &= same;
        table.push(vec![a.name.clone(), ca.len().to_string(), flag(same)]);
    }
    let differing = table.rows.iter().filter(|r| r[2] == "false").count();
    outcome(16, pass, format!("{} checks rerun, {differing} differ", first.len()), table)
}

/// `K(2) = 1`, inline against tabulated constants, and `abs_moment(1, p, 1)`
/// against one-dimensional quadrature.
pub fn constants_check(ps: &[f64]) -> Result<CheckOutput> {
    let mut table = Table::new(&["p", "k_inline", "k_table", "abs_moment", "quadrature", "abs_err", "pass"]);
    let k2 = k_constant(2.0)?;
    let mut pass = (k2 - 1.0).abs() <= 1e-12;
    let tbl = ConstantsTable::regenerate(ps, 1.0)?;
    let disagreement = tbl.max_disagreement()?;
    pass &= disagreement < TABLE_AGREEMENT_TOL;
    let mut worst: f64 = 0.0;
    for &p in ps {
        let am = abs_moment(1.0, p, 1.0)?;
        let quad = gaussian_expectation_kinked(|v| v.abs().powf(p), &[0.0], 1e-14)?.value;
        let err = (am - quad).abs();
        worst = worst.max(err);
        let ok = err <= 1e-9;
        pass &= ok;
        table.push(vec![num(p), num(k_constant(p)?), num(tbl.lookup(p).unwrap().k), num(am), num(quad), num(err), flag(ok)]);
    }
    Ok(outcome(
        1,
        pass,
        format!("|K(2)-1| = {:.1e}, worst moment error {worst:.1e}, table gap {disagreement:.1e}", (k2 - 1.0).abs()),
        table,
    ))
}

/// Wick sums of random vectors against Monte Carlo, and of unit copies
/// against `(2p−1)!! h^p`.
pub fn wick_check(seed: u64, dim: usize, ps: &[usize], samples: usize) -> Result<CheckOutput> {
    let mut rng = rng(seed, "wick");
    let mut table = Table::new(&["case", "p", "h", "wick", "reference", "stderr", "pass"]);
    let mut pass = true;
    for &p in ps {
        let vs: Vec<HVector> = (0..2 * p).map(|_| random_vector(&mut rng, dim, 0.5, 1.5)).collect();
        let w = wick_integral(&vs, 1.0)?;
        let batch = gaussian_sample(GaussianMeasureSpec::new(dim, 1.0)?, derive_seed(seed, &format!("wick-mc-{p}")), samples)?;
        let est = batch.mean(|x| vs.iter().map(|v| v.dot(x)).product())?;
        let ok = est.within(w, 3.0);
        pass &= ok;
        table.push(vec!["random-mc".into(), p.to_string(), num(1.0), num(w), num(est.value), num(est.stderr), flag(ok)]);
    }
    let e = HVector::basis(dim, 3);
    for h in [0.5, 1.5] {
        for p in 1..=4u32 {
            let w = wick_integral(&vec![e.clone(); 2 * p as usize], h)?;
            let exact = double_factorial_odd(p) as f64 * h.powi(p as i32);
            let ok = w == exact;
            pass &= ok;
            table.push(vec!["unit-copies".into(), p.to_string(), num(h), num(w), num(exact), num(0.0), flag(ok)]);
        }
    }
    let failed = table.rows.iter().filter(|r| r[6] == "false").count();
    Ok(outcome(2, pass, format!("{} cases, {failed} failed", table.rows.len()), table))
}

/// Exponential and mixed moments against Monte Carlo for random draws.
pub fn moments_check(seed: u64, dim: usize, draws: usize, ps: &[f64], samples: usize) -> Result<CheckOutput> {
    let mut rng = rng(seed, "moments");
    let mut table = Table::new(&["draw", "identity", "h", "p", "closed_form", "mc", "stderr", "pass"]);
    let mut pass = true;
    for draw in 0..draws {
        let h = rng.random_range(0.5..1.5);
        let u = random_vector(&mut rng, dim, 0.0, 0.5);
        let v = random_vector(&mut rng, dim, 0.0, 1.0);
        let a = random_vector(&mut rng, dim, 0.5, 1.5);
        let b = random_vector(&mut rng, dim, 0.0, 0.5);
        let p = ps[draw % ps.len()];
        let batch = gaussian_sample(GaussianMeasureSpec::new(dim, h)?, derive_seed(seed, &format!("moments-{draw}")), samples)?;
        let est = batch.means(3, |x, out| {
            let (lu, lv) = (u.dot(x), v.dot(x));
            out[0] = lu.exp() * lv.cos();
            out[1] = lu.exp() * lv.sin();
            out[2] = b.dot(x).exp() * a.dot(x).abs().powf(p);
        })?;
        let em = exp_moment(&u, &v, h)?;
        let mixed = mixed_moment_rhs(a.norm(), a.dot(b.coords()), b.norm(), p, h)?;
        for (name, closed, e) in [("exp-re", em.re, est[0]), ("exp-im", em.im, est[1]), ("mixed", mixed, est[2])] {
            let ok = e.within(closed, 3.0);
            pass &= ok;
            table.push(vec![draw.to_string(), name.into(), num(h), num(p), num(closed), num(e.value), num(e.stderr), flag(ok)]);
        }
    }
    let failed = table.rows.iter().filter(|r| r[7] == "false").count();
    Ok(outcome(3, pass, format!("{draws} draws, {} comparisons, {failed} outside 3σ", table.rows.len()), table))
}

fn c04_translation(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let mut rng = rng(seed, "translation");
    let mut table = Table::new(&["case", "symbol", "h", "a_norm", "lhs", "rhs", "residual", "stderr", "pass"]);
    let mut pass = true;
    for case in 0..10usize {
        let h: f64 = [0.5, 1.0, 2.0][case % 3];
        let a = random_vector(&mut rng, dim, 0.1, 0.6 * h.sqrt());
        let b = random_vector(&mut rng, dim, 0.3, 1.5);
        let (name, g): (&str, SymbolRef) = match case % 5 {
            0 => ("trig", Arc::new(trig(b.clone(), 0.0, 1.0))),
            1 => ("exp-i", Arc::new(exp_i(b.clone(), 1.0))),
            2 => ("bell", Arc::new(gaussian_bell(&presets::low_rank_operator(dim, 3)?, 1.0))),
            3 => ("poly", Arc::new(PolyScalarSymbol::new(vec![b.clone()], vec![2])?)),
            _ => ("constant", Arc::new(CylindricalSymbol::constant(dim, 1.0))),
        };
        let batch = gaussian_sample(GaussianMeasureSpec::new(dim, h)?, derive_seed(seed, &format!("translation-{case}")), 100_000)?;
        let r = translation_identity_residual(g.as_ref(), &a, h, &batch)?;
        let ok = gate(r.residual, 0.0, r.stderr);
        pass &= ok;
        table.push(vec![
            case.to_string(),
            name.into(),
            num(h),
            num(a.norm()),
            num(r.lhs),
            num(r.rhs),
            num(r.residual),
            num(r.stderr),
            flag(ok),
        ]);
        if name == "trig" {
            // Both sides equal e^{−h|b|²/2}; the shifted side is checked against it.
            let closed = (-0.5 * h * b.norm_sq()).exp();
            let pre = (-0.5 * a.norm_sq() / h).exp();
            let est = batch.mean(|x| {
                let shifted: f64 = b.dot(x) + b.dot(a.coords());
                shifted.cos() * pre * (-a.dot(x) / h).exp()
            })?;
            let ok = est.within(closed, 3.0);
            pass &= ok;
            table.push(vec![
                case.to_string(),
                "trig-closed-form".into(),
                num(h),
                num(a.norm()),
                num(closed),
                num(est.value),
                num((est.value - closed).abs()),
                num(est.stderr),
                flag(ok),
            ]);
        }
    }
    let failed = table.rows.iter().filter(|r| r[8] == "false").count();
    Ok(outcome(4, pass, format!("{} cases, {failed} outside 3σ", table.rows.len()), table))
}

fn c05_heat_closed_forms(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let m = HeatMethod::adaptive();
    let a = HVector::new(presets::geometric(dim, 0.9, 0.6))?;
    let cosine = trig(a.clone(), 0.0, 1.0);
    let square = PolyScalarSymbol::new(vec![a.clone()], vec![2])?;
    let mut table = Table::new(&["symbol", "point", "t", "value", "oracle", "error", "pass"]);
    let mut pass = true;
    for (k, x) in gaussian_points(dim, 10, seed, "heat-grid")?.iter().enumerate() {
        for t in [0.1, 1.0] {
            let ax = a.dot(x);
            let v = heat_apply(&cosine, x, t, &m)?.value.re;
            let oracle = (-0.5 * t * a.norm_sq()).exp() * ax.cos();
            let ok = (v - oracle).abs() < 1e-8;
            pass &= ok;
            table.push(vec!["cos".into(), k.to_string(), num(t), num(v), num(oracle), num((v - oracle).abs()), flag(ok)]);
            let v = heat_apply(&square, x, t, &m)?.value.re;
            let oracle = ax * ax + t * a.norm_sq();
            let ok = (v - oracle).abs() < 1e-10;
            pass &= ok;
            table.push(vec!["square".into(), k.to_string(), num(t), num(v), num(oracle), num((v - oracle).abs()), flag(ok)]);
        }
    }
    let worst = table.rows.iter().map(|r| r[5].parse::<f64>().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    Ok(outcome(5, pass, format!("{} evaluations, worst error {worst:.1e}", table.rows.len()), table))
}

fn c06_semigroup(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let m = HeatMethod::adaptive();
    let x = &gaussian_points(dim, 1, seed, "semigroup")?[0];
    let mut table = Table::new(&["symbol", "s", "t", "residual", "method_error", "pass"]);
    let mut pass = true;
    for (name, f) in presets::stock_symbols(dim)? {
        for s in [0.1, 0.5] {
            for t in [0.1, 0.5] {
                let r = semigroup_residual(f.clone(), x, s, t, &m)?;
                let ok = r.residual < 1e-7;
                pass &= ok;
                table.push(vec![name.clone(), num(s), num(t), num(r.residual), num(r.error), flag(ok)]);
            }
        }
    }
    let worst = worst_col(&table, 3);
    Ok(outcome(6, pass, format!("{} cases, worst residual {worst:.1e}", table.rows.len()), table))
}

fn worst_col(table: &Table, col: usize) -> f64 {
    table.rows.iter().map(|r| r[col].parse::<f64>().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

fn c07_commutation(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let m = HeatMethod::adaptive();
    let symbols = presets::stock_symbols(dim)?;
    let points = gaussian_points(dim, 50, seed, "commutation")?;
    // the finite-difference tier needs 1e−4, well within a fixed 32-point rule
    let fixed = HeatMethod::quadrature(32);
    let rows: Vec<Vec<Vec<String>>> = points
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let t = if k % 2 == 0 { 0.1 } else { 0.5 };
            symbols
                .iter()
                .map(|(name, f)| {
                    let an = commutation_residual(f.clone(), x, t, DerivativeMode::Analytic, &m)?;
                    let fd = commutation_residual(f.clone(), x, t, DerivativeMode::FiniteDifference, &fixed)?;
                    let ok = an.residual < 1e-6 && fd.residual < 1e-4;
                    Ok(vec![name.clone(), k.to_string(), num(t), num(an.residual), num(fd.residual), flag(ok)])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["symbol", "point", "t", "analytic_residual", "fd_residual", "pass"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let pass = table.rows.iter().all(|r| r[5] == "true");
    Ok(outcome(
        7,
        pass,
        format!(
            "{} cases, worst analytic {:.1e}, worst FD {:.1e}",
            table.rows.len(),
            worst_col(&table, 3),
            worst_col(&table, 4)
        ),
        table,
    ))
}

fn c08_generator_expansion(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let m = HeatMethod::adaptive();
    let n = 3;
    let a = HVector::basis(dim, 0);
    let f: SymbolRef =
        Arc::new(trig(a.clone(), 0.0, 1.0).with_trig_sm_claim(2 * n + 2, &presets::frame(dim)?, &presets::eps(dim)?)?);
    let ts = presets::T_GRID;
    let mut table = Table::new(&["kind", "point", "t", "residual", "remainder_bound", "qa_bound", "sm_bound", "pass"]);
    let mut pass = true;
    let mut slopes = Vec::new();
    let mut points = gaussian_points(dim, 10, seed, "expansion")?;
    for (k, x) in points.iter_mut().enumerate() {
        // keep |cos⟨a,x⟩| away from zero so the observed order is well defined
        x[0] = 0.1 * (k + 1) as f64;
        let report = expansion_check(f.clone(), x, &ts, n, &m)?;
        for row in &report.rows {
            let remainder = row.t.powi(4) / (16.0 * 24.0);
            let ok = row.pass && row.residual <= remainder + 3.0 * row.method_error + 1e-15;
            pass &= ok;
            table.push(vec![
                "expansion".into(),
                k.to_string(),
                num(row.t),
                num(row.residual),
                num(remainder),
                num(row.qa_bound.unwrap_or(f64::INFINITY)),
                num(row.sm_bound.unwrap_or(f64::INFINITY)),
                flag(ok),
            ]);
        }
        let slope = report.slope.unwrap_or(f64::NAN);
        let ok = (3.8..=4.2).contains(&slope);
        pass &= ok;
        slopes.push(slope);
        table.push(vec!["slope".into(), k.to_string(), num(f64::NAN), num(slope), num(4.0), num(f64::NAN), num(f64::NAN), flag(ok)]);
    }
    // (H_{t+δ} − H_t)/δ − ½H_tΔ is bounded by δ/8 · ‖Δ²f‖ = δ/8 · (Tr A)² ‖f‖.
    let claim = f.claims().qa.expect("trig carries a claim");
    let x = &points[0];
    for delta in [1e-2, 5e-3, 2.5e-3] {
        let r = generator_residual(f.clone(), x, 0.1, delta, &m)?;
        let bound = delta / 8.0 * claim.op.trace().powi(2) * claim.norm;
        let ok = r.residual <= bound + 3.0 * r.error + 1e-12;
        pass &= ok;
        table.push(vec!["generator".into(), "0".into(), num(delta), num(r.residual), num(bound), num(f64::NAN), num(f64::NAN), flag(ok)]);
    }
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(outcome(8, pass, format!("observed orders in [{lo:.3}, {hi:.3}], {} rows", table.rows.len()), table))
}

fn mc_setup(seed: u64, tag: &str) -> McSetup {
    McSetup::new(presets::H, McPlan::default(), derive_seed(seed, tag))
}

fn push_report(table: &mut Table, prefix: Vec<String>, report: &ConvergenceReport) {
    table.extend_csv(&prefix, &report.to_csv());
}

fn c09_extension_rates(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let chain = SubspaceChain::coordinate(dim, &SubspaceChain::even_dims(dim, 8))?;
    let symbols = presets::claimed_symbols(dim)?;
    let mut jobs = Vec::new();
    for (name, f) in &symbols {
        for e in [1.0, 2.0, 4.0] {
            if f.claims().smeps.is_some() {
                jobs.push((name.clone(), f.clone(), "sm", e));
            }
            if f.claims().qa.is_some() {
                jobs.push((name.clone(), f.clone(), "qa", e));
            }
        }
    }
    let reports: Vec<Vec<(String, ConvergenceReport)>> = jobs
        .par_iter()
        .map(|(name, f, kind, e)| {
            let setup = mc_setup(seed, &format!("rates-{name}-{kind}-{e}"));
            Ok(match *kind {
                "sm" => {
                    let r = sm_rate_check(f.as_ref(), &chain, *e, &setup)?;
                    vec![(name.clone(), r.direct), (name.clone(), r.cauchy)]
                }
                _ => vec![(name.clone(), qa_rate_check(f.as_ref(), &chain, *e, &setup)?)],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["symbol", "experiment", "exponent", "step", "n", "lhs", "stderr", "rhs", "pass"]);
    let mut pass = true;
    let mut count = 0;
    for (name, r) in reports.into_iter().flatten() {
        count += 1;
        let top = r.rows.last().expect("nonempty chain");
        let top_ok = r.experiment.ends_with("cauchy") || top.lhs <= 2.0 * top.stderr;
        pass &= r.pass() && top_ok;
        push_report(&mut table, vec![name, r.experiment.clone(), num(r.exponent)], &r);
    }
    let failed = table.rows.iter().filter(|r| r[8] == "false").count();
    Ok(outcome(9, pass, format!("{count} chains of 8 steps, {failed} steps above bound + 3σ"), table))
}

fn c10_projection_derivative(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let chain = SubspaceChain::coordinate(dim, &SubspaceChain::even_dims(dim, 8))?;
    let phi = random_orthogonal(dim, derive_seed(seed, "projection-rotation"))?;
    let mut ops: Vec<(String, TraceClassOperator)> = Vec::new();
    for r in [1, 2, 4] {
        ops.push((format!("rank{r}"), presets::low_rank_operator(dim, r)?));
    }
    ops.push(("rank4-rotated".into(), presets::low_rank_operator(dim, 4)?.conjugate(&phi)?));
    let mut table = Table::new(&["case", "p", "k", "n", "lhs", "stderr", "bound", "aux", "pass"]);
    let mut pass = true;
    let jobs: Vec<(usize, f64)> = (0..ops.len()).flat_map(|o| [1.0, 2.0, 4.0].map(|p| (o, p))).collect();
    let rows: Vec<Vec<Vec<String>>> = jobs
        .par_iter()
        .map(|&(o, p)| {
            let (name, op) = &ops[o];
            chain
                .steps()
                .iter()
                .map(|e| {
                    let setup = mc_setup(seed, &format!("projection-{name}-{p}"));
                    let r = qa_projection_moment_check(op, e, p, &setup)?;
                    let exact_ok = p != 2.0 || r.lhs.within(r.exact_p2, 3.0);
                    Ok(vec![
                        name.clone(),
                        num(p),
                        "0".into(),
                        e.dim().to_string(),
                        num(r.lhs.value),
                        num(r.lhs.stderr),
                        num(r.bound),
                        num(if p == 2.0 { r.exact_p2 } else { r.e_free_bound }),
                        flag(r.pass && exact_ok),
                    ])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().flatten().for_each(|r| table.push(r));

    let rank4 = presets::low_rank_operator(dim, 4)?;
    let a = HVector::new({
        let mut v = vec![0.5, 0.3, 0.2, 0.1];
        v.resize(dim, 0.0);
        v
    })?;
    let fs: Vec<(String, SymbolRef)> = vec![
        ("trig-rank1".into(), Arc::new(trig(HVector::new(presets::geometric(dim, 0.8, 0.5))?, 0.2, 1.0))),
        ("trig-rank4".into(), Arc::new(trig(a, 0.0, 1.0).with_trig_operator(&rank4)?)),
    ];
    let x = HVector::new(gaussian_points(dim, 1, seed, "derivative-point")?.remove(0))?;
    let djobs: Vec<(usize, usize, f64)> =
        (0..fs.len()).flat_map(|i| [1usize, 2].into_iter().flat_map(move |k| [1.0, 2.0, 4.0].map(|p| (i, k, p)))).collect();
    let reports = djobs
        .par_iter()
        .map(|&(i, k, p)| {
            let setup = mc_setup(seed, &format!("derivative-{i}-{k}-{p}"));
            Ok((i, k, derivative_extension_rate(fs[i].1.as_ref(), &x, k, &chain, p, &setup)?))
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, k, r) in reports {
        for row in &r.rows {
            table.push(vec![
                fs[i].0.clone(),
                num(r.exponent),
                k.to_string(),
                row.n.to_string(),
                num(row.lhs),
                num(row.stderr),
                num(row.rhs),
                num(r.table_disagreement),
                flag(row.pass && r.table_disagreement < TABLE_AGREEMENT_TOL),
            ]);
        }
    }
    pass &= table.rows.iter().all(|r| r[8] == "true");
    let failed = table.rows.iter().filter(|r| r[8] == "false").count();
    Ok(outcome(10, pass, format!("{} rows, {failed} failed", table.rows.len()), table))
}

fn c11_prodscal_nm(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let h = presets::H;
    let chain = SubspaceChain::coordinate(dim, &SubspaceChain::even_dims(dim, 8))?;
    let a = HVector::new(presets::geometric(dim, 0.9, 0.7))?;
    let b = HVector::new(presets::geometric(dim, 0.6, 0.8))?;
    let c = random_orthogonal(dim, derive_seed(seed, "prodscal-c"))?.column(0).scaled(0.5);
    let cases: Vec<(Vec<HVector>, Vec<u32>)> = vec![
        (vec![a.clone()], vec![1]),
        (vec![a.clone()], vec![2]),
        (vec![a.clone()], vec![3]),
        (vec![a.clone(), b.clone()], vec![1, 1]),
        (vec![a.clone(), b.clone()], vec![2, 1]),
        (vec![a.clone(), b.clone(), c.clone()], vec![1, 1, 1]),
    ];
    let mut table = Table::new(&["case", "kind", "p", "n", "lhs", "stderr", "rhs", "pass"]);
    let jobs: Vec<(usize, f64)> = (0..cases.len()).flat_map(|i| [1.0, 2.0].map(|p| (i, p))).collect();
    let reports = jobs
        .par_iter()
        .map(|&(i, p)| {
            let setup = mc_setup(seed, &format!("prodscal-{i}-{p}"));
            Ok((i, prodscal_rate_check(&cases[i].0, &cases[i].1, &chain, p, &setup)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pass = true;
    for (i, r) in &reports {
        pass &= r.pass();
        let label = format!("alpha{:?}", cases[*i].1).replace(", ", "-");
        for row in &r.rows {
            table.push(vec![
                label.clone(),
                "rate".into(),
                num(r.exponent),
                row.n.to_string(),
                num(row.lhs),
                num(row.stderr),
                num(row.rhs),
                flag(row.pass),
            ]);
        }
    }
    // single factor: closed form against one-dimensional quadrature
    for p in [1.0, 2.0, 4.0] {
        for e in chain.steps() {
            let closed = ext_prodscal_closed_form(&a, e, p, h)?;
            let sigma = h.sqrt() * e.distance(a.coords())?;
            let quad = if sigma == 0.0 {
                0.0
            } else {
                gaussian_expectation_kinked(|v| (sigma * v).abs().powf(p), &[0.0], 1e-14)?.value.powf(1.0 / p)
            };
            let ok = (closed - quad).abs() <= 1e-10 * (1.0 + quad);
            pass &= ok;
            table.push(vec![
                "alpha[1]".into(),
                "closed-form".into(),
                num(p),
                e.dim().to_string(),
                num(closed),
                num(0.0),
                num(quad),
                flag(ok),
            ]);
        }
    }
    let small = 8;
    let sa = HVector::new(presets::geometric(small, 0.9, 0.7))?;
    let sb = HVector::new(presets::geometric(small, 0.6, 0.8))?;
    let sc = HVector::basis(small, 2).scaled(0.7);
    let nm_cases: Vec<(Vec<HVector>, Vec<u32>, Vec<HVector>, Vec<u32>)> = vec![
        (vec![sa.clone()], vec![1], vec![], vec![]),
        (vec![sa.clone()], vec![3], vec![sb.clone()], vec![2]),
        (vec![sa.clone(), sb.clone()], vec![1, 2], vec![sc.clone()], vec![1]),
        (vec![sa.clone(), sb.clone(), sc.clone()], vec![1, 1, 1], vec![sb.clone(), sc.clone()], vec![2, 1]),
    ];
    let mut grng = rng(seed, "nm-grid");
    let y_grid: Vec<(HVector, HVector)> = [0.0, 0.5, 1.0, 3.0]
        .iter()
        .map(|&r| {
            let y = random_vector(&mut grng, small, 1.0, 1.0);
            let eta = random_vector(&mut grng, small, 1.0, 1.0);
            (y.scaled(r / 2f64.sqrt()), eta.scaled(r / 2f64.sqrt()))
        })
        .collect();
    for (i, (al, alpha, bl, beta)) in nm_cases.iter().enumerate() {
        let r = nm_bound_check(al, alpha, bl, beta, h, &y_grid, &McPlan::fixed(100_000), derive_seed(seed, &format!("nm-{i}")))?;
        pass &= r.pass();
        for row in &r.rows {
            table.push(vec![
                format!("nm{i}-m{}", r.m),
                "nm".into(),
                num(1.0),
                num(row.y_norm),
                num(row.ratio.value),
                num(row.ratio.stderr),
                num(r.bound),
                flag(row.pass),
            ]);
        }
    }
    let failed = table.rows.iter().filter(|r| r[7] == "false").count();
    Ok(outcome(11, pass, format!("{} rows, {failed} failed", table.rows.len()), table))
}

fn c12_covariance(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let m = HeatMethod::adaptive();
    let symbols = presets::stock_symbols(dim)?;
    let x = &gaussian_points(dim, 1, seed, "covariance")?[0];
    let rows = (0..10u64)
        .into_par_iter()
        .map(|k| {
            let phi = random_orthogonal(dim, derive_seed(seed, &format!("covariance-{k}")))?;
            symbols
                .iter()
                .map(|(name, f)| {
                    let r = covariance_residual(f.clone(), &phi, x, 0.5, &m)?;
                    let ok = r.residual < 1e-8;
                    Ok(vec![name.clone(), k.to_string(), num(r.residual), num(r.error), flag(ok)])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["symbol", "rotation", "residual", "method_error", "pass"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let pass = table.rows.iter().all(|r| r[4] == "true");
    Ok(outcome(12, pass, format!("{} cases, worst residual {:.1e}", table.rows.len(), worst_col(&table, 2)), table))
}

fn c13_multiplication_commutator(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let q = HeatMethod::adaptive();
    let a = HVector::new(presets::geometric(dim, 1.0, 0.5))?;
    let a = a.scaled(1.0 / a.norm());
    let points = gaussian_points(dim, 5, seed, "commutator")?;
    let mut table = Table::new(&["case", "method", "point", "t", "residual", "tolerance", "pass"]);
    let mut pass = true;
    let cosine: SymbolRef = Arc::new(trig(a.clone(), 0.0, 1.0));
    let ortho = HVector::basis(dim, dim - 1);
    for (k, x) in points.iter().enumerate() {
        for t in [0.1, 0.5] {
            for (case, u) in [("parallel", &a), ("orthogonal", &ortho)] {
                let r = multiplication_commutator_residual(cosine.clone(), x, t, u, &q)?;
                let ok = r.residual < 1e-8;
                pass &= ok;
                table.push(vec![case.into(), "quadrature".into(), k.to_string(), num(t), num(r.residual), num(1e-8), flag(ok)]);
            }
        }
    }
    let mc_cases: Vec<(&str, SymbolRef, HVector)> = vec![
        ("trig-oblique", cosine.clone(), HVector::basis(dim, 1)),
        ("bell", Arc::new(gaussian_bell(&presets::low_rank_operator(dim, 3)?, 1.0)), HVector::basis(dim, 0)),
        ("constant", Arc::new(CylindricalSymbol::constant(dim, 2.0)), HVector::basis(dim, 4)),
        ("exp-i", Arc::new(exp_i(a.scaled(0.8), 1.0)), a.clone()),
    ];
    for (i, (case, f, u)) in mc_cases.iter().enumerate() {
        let method = HeatMethod::monte_carlo(200_000, derive_seed(seed, &format!("commutator-mc-{i}")));
        let r = multiplication_commutator_residual(f.clone(), &points[0], 0.5, u, &method)?;
        let ok = gate(r.residual, 0.0, r.error);
        pass &= ok;
        table.push(vec![case.to_string(), "monte-carlo".into(), "0".into(), num(0.5), num(r.residual), num(3.0 * r.error), flag(ok)]);
    }
    let failed = table.rows.iter().filter(|r| r[6] == "false").count();
    Ok(outcome(13, pass, format!("{} cases, {failed} failed", table.rows.len()), table))
}

fn c14_holder(seed: u64) -> Result<CheckOutput> {
    let mut rng = rng(seed, "holder");
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut table = Table::new(&["instance", "n", "points", "p", "lhs", "rhs", "slack", "pass"]);
    for i in 0..1000 {
        let n = rng.random_range(1..=5usize);
        let pts = rng.random_range(2..=12usize);
        let p = rng.random_range(1.0..5.0);
        let draw = |r: &mut ChaCha8Rng| (0..pts).map(|_| r.random_range(-2.0..2.0)).collect::<Vec<f64>>();
        let f: Vec<Vec<f64>> = (0..n).map(|_| draw(&mut rng)).collect();
        let g: Vec<Vec<f64>> = (0..n).map(|_| draw(&mut rng)).collect();
        let mut w: Vec<f64> = (0..pts).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let r = holder_telescoping_check(&f, &g, p, &w)?;
        if !r.pass {
            violations += 1;
        }
        min_slack = min_slack.min(r.slack);
        table.push(vec![i.to_string(), n.to_string(), pts.to_string(), num(p), num(r.lhs), num(r.rhs), num(r.slack), flag(r.pass)]);
    }
    Ok(outcome(14, violations == 0, format!("1000 instances, {violations} violations, min slack {min_slack:.3e}"), table))
}

fn c15_laplacian_basis(seed: u64) -> Result<CheckOutput> {
    let dim = presets::DIM;
    let canonical = OrthonormalFrame::canonical(dim)?;
    let phi = random_orthogonal(dim, derive_seed(seed, "laplacian-rotation"))?;
    let rotated: Vec<HVector> = (0..dim).map(|j| phi.column(j)).collect();
    let mut table = Table::new(&["symbol", "point", "canonical", "rotated", "difference", "pass"]);
    for (k, x) in gaussian_points(dim, 20, seed, "laplacian")?.iter().enumerate() {
        for (name, f) in presets::stock_symbols(dim)? {
            let a = laplacian(f.as_ref(), x, &canonical)?;
            let b = laplacian_in_basis(f.as_ref(), x, &rotated)?;
            let d = (a - b).norm();
            table.push(vec![name, k.to_string(), num(a.re), num(b.re), num(d), flag(d < 1e-9)]);
        }
    }
    let pass = table.rows.iter().all(|r| r[5] == "true");
    Ok(outcome(15, pass, format!("{} cases, worst difference {:.1e}", table.rows.len(), worst_col(&table, 4)), table))
}
