//! Experiment configuration: a JSON tree naming the operation, symbols by
//! family and parameter block, grids, sampling method and seed.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use wienerlab::extension::SubspaceChain;
use wienerlab::hilbert::{random_orthogonal, HVector, TraceClassOperator};
use wienerlab::symbols::{exp_i, gaussian_bell, trig, PolyScalarSymbol, ProductSymbol, SymbolRef};

use crate::presets;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("config-invalid: field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid { field: field.into(), message: message.into() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Constants,
    Wick,
    Moments,
    Extend,
    Heat,
    Expand,
    VerifyAll,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Constants => "constants",
            Operation::Wick => "wick",
            Operation::Moments => "moments",
            Operation::Extend => "extend",
            Operation::Heat => "heat",
            Operation::Expand => "expand",
            Operation::VerifyAll => "verify-all",
        }
    }
}

/// A vector given explicitly, as a geometric sequence, or as a scaled
/// canonical basis vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Explicit(Vec<f64>),
    Geometric {
        first: f64,
        ratio: f64,
        #[serde(default)]
        len: Option<usize>,
    },
    Basis {
        basis: usize,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl VectorSpec {
    pub fn build(&self, dim: usize, field: &str) -> Result<HVector, ConfigError> {
        let coords = match self {
            VectorSpec::Explicit(v) => {
                if v.len() != dim {
                    return invalid(field, format!("has {} coordinates but dim is {dim}", v.len()));
                }
                v.clone()
            }
            VectorSpec::Geometric { first, ratio, len } => {
                let n = len.unwrap_or(dim);
                if n > dim {
                    return invalid(field, format!("len {n} exceeds dim {dim}"));
                }
                let mut v = presets::geometric(n, *first, *ratio);
                v.resize(dim, 0.0);
                v
            }
            VectorSpec::Basis { basis, scale } => {
                if *basis >= dim {
                    return invalid(field, format!("basis index {basis} out of range for dim {dim}"));
                }
                HVector::basis(dim, *basis).scaled(*scale).into_vec()
            }
        };
        HVector::new(coords).or_else(|e| invalid(field, e.to_string()))
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SymbolSpec {
    /// `c·cos(⟨a,x⟩ + θ)`; `sm_order` adds an `S_m(B, ε)` claim for the preset ε.
    Trig {
        direction: VectorSpec,
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        sm_order: Option<usize>,
    },
    ExpI {
        direction: VectorSpec,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        sm_order: Option<usize>,
    },
    /// `c·e^{−Q_C(x)/2}` with `C` diagonal; zero curvatures are dropped.
    Bell {
        curvatures: VectorSpec,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Poly {
        directions: Vec<VectorSpec>,
        exponents: Vec<u32>,
    },
    Product {
        factors: Vec<SymbolSpec>,
    },
}

impl SymbolSpec {
    pub fn label(&self) -> String {
        match self {
            SymbolSpec::Trig { .. } => "trig".into(),
            SymbolSpec::ExpI { .. } => "exp-i".into(),
            SymbolSpec::Bell { .. } => "bell".into(),
            SymbolSpec::Poly { .. } => "poly".into(),
            SymbolSpec::Product { factors } => {
                format!("product({})", factors.iter().map(|f| f.label()).collect::<Vec<_>>().join("*"))
            }
        }
    }

    pub fn build(&self, dim: usize, field: &str) -> Result<SymbolRef, ConfigError> {
        let wrap = |e: wienerlab::LabError| ConfigError::Invalid { field: field.into(), message: e.to_string() };
        let sm = |s: wienerlab::symbols::CylindricalSymbol, m: Option<usize>| -> Result<SymbolRef, ConfigError> {
            Ok(match m {
                Some(m) => Arc::new(
                    s.with_trig_sm_claim(m, &presets::frame(dim).map_err(wrap)?, &presets::eps(dim).map_err(wrap)?)
                        .map_err(wrap)?,
                ),
                None => Arc::new(s),
            })
        };
        match self {
            SymbolSpec::Trig { direction, phase, amplitude, sm_order } => {
                let a = direction.build(dim, &format!("{field}.direction"))?;
                sm(trig(a, *phase, *amplitude), *sm_order)
            }
            SymbolSpec::ExpI { direction, amplitude, sm_order } => {
                let a = direction.build(dim, &format!("{field}.direction"))?;
                sm(exp_i(a, *amplitude), *sm_order)
            }
            SymbolSpec::Bell { curvatures, amplitude } => {
                let c = curvatures.build(dim, &format!("{field}.curvatures"))?;
                let (lams, vecs): (Vec<f64>, Vec<HVector>) = c
                    .coords()
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| **l != 0.0)
                    .map(|(j, l)| (*l, HVector::basis(dim, j)))
                    .unzip();
                let op = TraceClassOperator::new(dim, lams, vecs).map_err(wrap)?;
                Ok(Arc::new(gaussian_bell(&op, *amplitude)))
            }
            SymbolSpec::Poly { directions, exponents } => {
                let dirs = directions
                    .iter()
                    .enumerate()
                    .map(|(i, d)| d.build(dim, &format!("{field}.directions[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Arc::new(PolyScalarSymbol::new(dirs, exponents.clone()).map_err(wrap)?))
            }
            SymbolSpec::Product { factors } => {
                let fs = factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.build(dim, &format!("{field}.factors[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Arc::new(ProductSymbol::new(fs).map_err(wrap)?))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    Coordinate,
    Rotated,
}

/// `steps` nested subspaces of dimensions `D/steps, 2D/steps, …, D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub kind: ChainKind,
    pub steps: usize,
    #[serde(default)]
    pub rotation_seed: u64,
}

impl ChainSpec {
    pub fn build(&self, dim: usize) -> Result<SubspaceChain, ConfigError> {
        if self.steps == 0 || self.steps > dim {
            return invalid("chain.steps", format!("must lie in 1..={dim}, got {}", self.steps));
        }
        let dims = SubspaceChain::even_dims(dim, self.steps);
        let wrap = |e: wienerlab::LabError| ConfigError::Invalid { field: "chain".into(), message: e.to_string() };
        match self.kind {
            ChainKind::Coordinate => SubspaceChain::coordinate(dim, &dims).map_err(wrap),
            ChainKind::Rotated => {
                let phi = random_orthogonal(dim, self.rotation_seed).map_err(wrap)?;
                SubspaceChain::rotated(&phi, &dims).map_err(wrap)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    /// Gauss–Hermite points per axis; `0` doubles until convergence.
    #[serde(default)]
    pub quad_order: usize,
    /// Initial Monte Carlo sample count.
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    /// Largest sample count reached by doubling.
    #[serde(default = "default_mc_cap")]
    pub mc_cap: usize,
}

fn default_mc() -> usize {
    100_000
}

fn default_mc_cap() -> usize {
    800_000
}

impl Default for MethodSpec {
    fn default() -> Self {
        MethodSpec { quad_order: 0, mc_samples: default_mc(), mc_cap: default_mc_cap() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub operation: Operation,
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default)]
    pub chain: Option<ChainSpec>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default = "default_q_grid")]
    pub q_grid: Vec<f64>,
    /// Expansion order `N`.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub method: MethodSpec,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_dim() -> usize {
    presets::DIM
}
fn default_t_grid() -> Vec<f64> {
    presets::T_GRID.to_vec()
}
fn default_s_grid() -> Vec<f64> {
    vec![0.1, 0.5]
}
fn default_p_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_q_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}
fn default_order() -> usize {
    3
}
fn default_out() -> PathBuf {
    PathBuf::from("wienerlab-out")
}

impl ExperimentConfig {
    /// The shipped preset for an operation.
    pub fn preset(op: Operation) -> Self {
        let text = match op {
            Operation::Constants => include_str!("../presets/constants.json"),
            Operation::Wick => include_str!("../presets/wick.json"),
            Operation::Moments => include_str!("../presets/moments.json"),
            Operation::Extend => include_str!("../presets/extend.json"),
            Operation::Heat => include_str!("../presets/heat.json"),
            Operation::Expand => include_str!("../presets/expand.json"),
            Operation::VerifyAll => include_str!("../presets/verify-all.json"),
        };
        Self::parse(text, &format!("preset {}", op.name())).expect("shipped presets are valid")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.id.trim().is_empty() {
            return invalid("id", "must be nonempty");
        }
        if self.dim == 0 {
            return invalid("dim", "must be positive");
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return invalid("h", "must be positive and finite");
        }
        for (name, grid) in [("t_grid", &self.t_grid), ("s_grid", &self.s_grid)] {
            if grid.is_empty() {
                return invalid(name, "grid is empty");
            }
            if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return invalid(name, "entries must be finite and nonnegative");
            }
        }
        for (name, grid) in [("p_grid", &self.p_grid), ("q_grid", &self.q_grid)] {
            if grid.is_empty() {
                return invalid(name, "grid is empty");
            }
            if grid.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
                return invalid(name, "entries must be finite and at least 1");
            }
        }
        if self.method.mc_samples == 0 {
            return invalid("method.mc_samples", "must be positive");
        }
        if self.method.mc_cap < self.method.mc_samples {
            return invalid("method.mc_cap", "must be at least mc_samples");
        }
        for (i, s) in self.symbols.iter().enumerate() {
            s.build(self.dim, &format!("symbols[{i}]"))?;
        }
        if let Some(c) = &self.chain {
            c.build(self.dim)?;
        }
        Ok(())
    }

    pub fn build_symbols(&self) -> Result<Vec<(String, SymbolRef)>, ConfigError> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((format!("{i}-{}", s.label()), s.build(self.dim, &format!("symbols[{i}]"))?)))
            .collect()
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for op in [
            Operation::Constants,
            Operation::Wick,
            Operation::Moments,
            Operation::Extend,
            Operation::Heat,
            Operation::Expand,
            Operation::VerifyAll,
        ] {
            let c = ExperimentConfig::preset(op);
            assert_eq!(c.operation, op);
        }
    }

    #[test]
    fn empty_grid_is_invalid() {
        let err = ExperimentConfig::parse(r#"{"id": "x", "operation": "heat", "seed": 1, "t_grid": []}"#, "test")
            .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "t_grid"), "{err}");
    }

    #[test]
    fn missing_seed_reports_position() {
        let err = ExperimentConfig::parse("{\n  \"id\": \"x\",\n  \"operation\": \"wick\"\n}", "test").unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("seed"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn inconsistent_dimension_is_invalid() {
        let text = r#"{"id": "x", "operation": "heat", "seed": 1, "dim": 3,
            "symbols": [{"family": "trig", "direction": [1.0, 2.0]}]}"#;
        let err = ExperimentConfig::parse(text, "test").unwrap_err();
        assert!(err.to_string().contains("symbols[0].direction"), "{err}");
    }

    #[test]
    fn hash_is_stable() {
        let a = ExperimentConfig::preset(Operation::Heat);
        assert_eq!(a.hash(), a.clone().hash());
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
