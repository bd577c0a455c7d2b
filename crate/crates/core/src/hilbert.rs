//! Finite truncation of the Hilbert space `H`.
//!
//! The countable basis is modelled by the index range `0..dim`. Phase space
//! `H²` is not a separate type: a frame may carry a pairing of indices that
//! marks one index as the position coordinate `u_j` and another as the
//! momentum coordinate `v_j` of the same basis element.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};

/// Tolerance on orthonormality at construction time.
pub const ORTHONORMAL_TOL: f64 = 1e-12;
/// Tolerance on round-trip identities (`QQᵀ = I` and friends).
pub const ROUND_TRIP_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Coefficients of a vector of `H` on the canonical frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HVector(Vec<f64>);

impl HVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("vector must have at least one coordinate");
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return invalid(format!("coordinate {i} is not finite"));
        }
        Ok(HVector(coords))
    }

    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        HVector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        HVector(vec![0.0; dim])
    }

    /// The `j`-th canonical basis vector `e_j`.
    pub fn basis(dim: usize, j: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[j] = 1.0;
        HVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        HVector(self.0.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &[f64]) -> Self {
        HVector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Self {
        HVector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }
}

impl Deref for HVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for HVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The truncated Hilbert basis `(e_j)`, `0 ≤ j < dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalFrame {
    dim: usize,
    phase_pairing: Vec<(usize, usize)>,
}

impl OrthonormalFrame {
    pub fn new(dim: usize, phase_pairing: Vec<(usize, usize)>) -> Result<Self> {
        if dim == 0 {
            return invalid("frame dimension must be at least 1");
        }
        let mut seen = vec![false; dim];
        for &(u, v) in &phase_pairing {
            if u == v {
                return invalid(format!("phase pair ({u}, {v}) uses the same index twice"));
            }
            for idx in [u, v] {
                if idx >= dim {
                    return invalid(format!("phase index {idx} outside frame of dimension {dim}"));
                }
                if seen[idx] {
                    return invalid(format!("index {idx} appears in more than one phase pair"));
                }
                seen[idx] = true;
            }
        }
        Ok(OrthonormalFrame { dim, phase_pairing })
    }

    pub fn canonical(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    /// Phase space of `n` position and `n` momentum coordinates, laid out as
    /// `u_j = e_j` and `v_j = e_{n+j}`.
    pub fn phase_space(n: usize) -> Result<Self> {
        Self::new(2 * n, (0..n).map(|j| (j, n + j)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phase_pairing(&self) -> &[(usize, usize)] {
        &self.phase_pairing
    }

    pub fn vector(&self, j: usize) -> HVector {
        HVector::basis(self.dim, j)
    }

    /// Frame indices grouped by basis element: a phase pair `[u_j, v_j]` or a
    /// lone index. Groups are ordered by their smallest index.
    pub fn gamma_groups(&self) -> Vec<Vec<usize>> {
        let mut partner = vec![None; self.dim];
        for &(u, v) in &self.phase_pairing {
            partner[u] = Some(v);
            partner[v] = Some(u);
        }
        let mut groups = Vec::new();
        for i in 0..self.dim {
            match partner[i] {
                Some(p) if p < i => {}
                Some(p) => {
                    let (u, v) = self
                        .phase_pairing
                        .iter()
                        .copied()
                        .find(|&(u, v)| (u == i && v == p) || (u == p && v == i))
                        .expect("pair registered");
                    groups.push(vec![u, v]);
                }
                None => groups.push(vec![i]),
            }
        }
        groups
    }
}

/// Nonnegative weights `ε_j` attached to frame indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSequence {
    values: Vec<f64>,
    sum: f64,
    sum_sq: f64,
}

impl EpsilonSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|e| !e.is_finite() || *e < 0.0) {
            return invalid(format!("epsilon {i} must be finite and nonnegative"));
        }
        let sum = values.iter().sum();
        let sum_sq = values.iter().map(|e| e * e).sum();
        Ok(EpsilonSequence { values, sum, sum_sq })
    }

    /// `ε_j = first · ratio^j`.
    pub fn geometric(dim: usize, first: f64, ratio: f64) -> Result<Self> {
        Self::new((0..dim).map(|j| first * ratio.powi(j as i32)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// One weight per basis element of `frame`; a phase pair takes the larger
    /// of its two weights.
    pub fn gamma_values(&self, frame: &OrthonormalFrame) -> Vec<f64> {
        frame
            .gamma_groups()
            .iter()
            .map(|g| g.iter().map(|&i| self.values[i]).fold(0.0, f64::max))
            .collect()
    }

    pub fn gamma_sum(&self, frame: &OrthonormalFrame) -> f64 {
        self.gamma_values(frame).iter().sum()
    }

    pub fn gamma_sum_sq(&self, frame: &OrthonormalFrame) -> f64 {
        self.gamma_values(frame).iter().map(|e| e * e).sum()
    }
}

/// Finite-dimensional subspace `E` given by an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<HVector>,
    // Some(n) when the basis is exactly e_0..e_{n-1}; projection is then a truncation.
    prefix: Option<usize>,
}

impl Subspace {
    pub fn new(ambient: usize, basis: Vec<HVector>) -> Result<Self> {
        if ambient == 0 {
            return invalid("ambient dimension must be at least 1");
        }
        if basis.len() > ambient {
            return invalid("more basis vectors than the ambient dimension");
        }
        for b in &basis {
            check_dims("subspace basis", ambient, b.dim())?;
        }
        for i in 0..basis.len() {
            for j in 0..=i {
                let g = basis[i].dot(&basis[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > ORTHONORMAL_TOL {
                    return invalid(format!(
                        "basis not orthonormal: <b{i}, b{j}> = {g:e}"
                    ));
                }
            }
        }
        let prefix = detect_prefix(&basis);
        Ok(Subspace { ambient, basis, prefix })
    }

    /// Orthonormalizes `vectors` (two passes of modified Gram–Schmidt) and
    /// drops numerically dependent ones.
    pub fn span(ambient: usize, vectors: &[HVector]) -> Result<Self> {
        let mut basis: Vec<HVector> = Vec::new();
        for v in vectors {
            check_dims("subspace span", ambient, v.dim())?;
            let scale = v.norm();
            if scale == 0.0 {
                continue;
            }
            let mut w = v.clone().into_vec();
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    for (wi, bi) in w.iter_mut().zip(b.iter()) {
                        *wi -= c * bi;
                    }
                }
            }
            let n = norm(&w);
            if n > 1e-10 * scale {
                basis.push(HVector(w.into_iter().map(|x| x / n).collect()));
            }
        }
        Self::new(ambient, basis)
    }

    /// `span(e_0, …, e_{n-1})`.
    pub fn coordinate(ambient: usize, n: usize) -> Result<Self> {
        if n > ambient {
            return invalid(format!("coordinate subspace of dimension {n} exceeds {ambient}"));
        }
        Self::new(ambient, (0..n).map(|j| HVector::basis(ambient, j)).collect())
    }

    pub fn full(ambient: usize) -> Result<Self> {
        Self::coordinate(ambient, ambient)
    }

    pub fn zero(ambient: usize) -> Result<Self> {
        Self::new(ambient, Vec::new())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[HVector] {
        &self.basis
    }

    /// True when this basis starts with every vector of `other`'s basis.
    pub fn extends(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient
            && other.basis.len() <= self.basis.len()
            && other.basis.iter().zip(&self.basis).all(|(a, b)| a == b)
    }

    /// Writes `π_E(x)` into `out` without checking dimensions.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        if let Some(n) = self.prefix {
            out[..n].copy_from_slice(&x[..n]);
            out[n..].iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for b in &self.basis {
            let c = dot(x, b);
            for (o, bi) in out.iter_mut().zip(b.iter()) {
                *o += c * bi;
            }
        }
    }

    pub fn project_slice(&self, x: &[f64]) -> Result<HVector> {
        check_dims("project", self.ambient, x.len())?;
        let mut out = vec![0.0; self.ambient];
        self.project_into(x, &mut out);
        Ok(HVector(out))
    }

    /// `|x − π_E(x)|`.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        let p = self.project_slice(x)?;
        Ok(norm(&p.sub(x)))
    }
}

fn detect_prefix(basis: &[HVector]) -> Option<usize> {
    basis
        .iter()
        .enumerate()
        .all(|(j, b)| b.iter().enumerate().all(|(i, &c)| c == if i == j { 1.0 } else { 0.0 }))
        .then_some(basis.len())
}

/// Orthogonal projection `π_E(x) = Σ_k ⟨x, b_k⟩ b_k`.
pub fn project(e: &Subspace, x: &HVector) -> Result<HVector> {
    e.project_slice(x)
}

/// Selfadjoint nonnegative operator of finite rank, stored by its nonzero
/// eigenpairs in decreasing eigenvalue order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceClassOperator {
    dim: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<HVector>,
}

impl TraceClassOperator {
    pub fn new(dim: usize, eigenvalues: Vec<f64>, eigenvectors: Vec<HVector>) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.len() {
            return invalid("eigenvalue and eigenvector counts differ");
        }
        if let Some(i) = eigenvalues.iter().position(|l| !l.is_finite() || *l < 0.0) {
            return invalid(format!("eigenvalue {i} must be finite and nonnegative"));
        }
        // validates orthonormality and dimensions
        Subspace::new(dim, eigenvectors.clone())?;
        let mut pairs: Vec<(f64, HVector)> = eigenvalues
            .into_iter()
            .zip(eigenvectors)
            .filter(|(l, _)| *l > 0.0)
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        Ok(TraceClassOperator { dim, eigenvalues, eigenvectors })
    }

    pub fn zero(dim: usize) -> Self {
        TraceClassOperator { dim, eigenvalues: Vec::new(), eigenvectors: Vec::new() }
    }

    /// `A = a aᵀ`: eigenvalue `|a|²` on `a/|a|`.
    pub fn rank_one(a: &HVector) -> Self {
        let n = a.norm();
        if n == 0.0 {
            return Self::zero(a.dim());
        }
        TraceClassOperator {
            dim: a.dim(),
            eigenvalues: vec![n * n],
            eigenvectors: vec![a.scaled(1.0 / n)],
        }
    }

    /// Diagonal on the canonical frame.
    pub fn diagonal(lambdas: &[f64]) -> Result<Self> {
        let dim = lambdas.len();
        Self::new(
            dim,
            lambdas.to_vec(),
            (0..dim).map(|j| HVector::basis(dim, j)).collect(),
        )
    }

    /// Eigendecomposition of a symmetric positive semidefinite matrix given
    /// in row-major order. Eigenvalues below `1e-14·λ_max` are dropped.
    pub fn from_symmetric(dim: usize, row_major: &[f64]) -> Result<Self> {
        check_dims("operator matrix", dim * dim, row_major.len())?;
        let m = DMatrix::from_row_slice(dim, dim, row_major);
        if (&m - m.transpose()).amax() > ROUND_TRIP_TOL * (1.0 + m.amax()) {
            return invalid("operator matrix is not symmetric");
        }
        Self::from_matrix(&m)
    }

    pub(crate) fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        let eig = SymmetricEigen::new(m.clone());
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let cutoff = 1e-14 * lmax.max(f64::MIN_POSITIVE);
        let mut vals = Vec::new();
        let mut vecs = Vec::new();
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l < -1e-10 * lmax.max(1.0) {
                return invalid(format!("operator has negative eigenvalue {l:e}"));
            }
            if l > cutoff {
                vals.push(l);
                vecs.push(HVector(eig.eigenvectors.column(k).iter().copied().collect()));
            }
        }
        Self::new(dim, vals, vecs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[HVector] {
        &self.eigenvectors
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (l, u) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    m[(i, j)] += l * u[i] * u[j];
                }
            }
        }
        m
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return invalid("operators may only be scaled by nonnegative factors");
        }
        Self::new(
            self.dim,
            self.eigenvalues.iter().map(|l| c * l).collect(),
            self.eigenvectors.clone(),
        )
    }

    pub fn sum(&self, other: &TraceClassOperator) -> Result<Self> {
        check_dims("operator sum", self.dim, other.dim)?;
        Self::from_matrix(&(self.to_matrix() + other.to_matrix()))
    }

    /// `φ* A φ`, whose eigenvectors are `φ* u_j`.
    pub fn conjugate(&self, phi: &OrthogonalMap) -> Result<Self> {
        check_dims("conjugate", self.dim, phi.dim())?;
        Self::new(
            self.dim,
            self.eigenvalues.clone(),
            self.eigenvectors.iter().map(|u| phi.adjoint_apply_slice(u)).collect(),
        )
    }

    pub(crate) fn q_form_slice(&self, x: &[f64]) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(l, u)| {
                let c = u.dot(x);
                l * c * c
            })
            .sum()
    }

    /// Polarized form `⟨Ax, y⟩`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims("bilinear", self.dim, x.len())?;
        check_dims("bilinear", self.dim, y.len())?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(l, u)| l * u.dot(x) * u.dot(y))
            .sum())
    }
}

/// `Q_A(x) = ⟨Ax, x⟩ = Σ_j λ_j ⟨u_j, x⟩²`.
pub fn q_form(a: &TraceClassOperator, x: &[f64]) -> Result<f64> {
    check_dims("q_form", a.dim, x.len())?;
    Ok(a.q_form_slice(x))
}

/// `‖x‖_A = Q_A(x)^{1/2}`.
pub fn a_norm(a: &TraceClassOperator, x: &[f64]) -> Result<f64> {
    q_form(a, x).map(f64::sqrt)
}

/// Orthogonal map `φ` of the truncation, `φ*φ = φφ* = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMap {
    matrix: DMatrix<f64>,
}

impl OrthogonalMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return invalid("orthogonal map must be a nonempty square matrix");
        }
        let id = DMatrix::<f64>::identity(matrix.nrows(), matrix.ncols());
        let e1 = (&matrix * matrix.transpose() - &id).amax();
        let e2 = (matrix.transpose() * &matrix - &id).amax();
        if e1 > ROUND_TRIP_TOL || e2 > ROUND_TRIP_TOL {
            return invalid(format!("matrix is not orthogonal (defect {:e})", e1.max(e2)));
        }
        Ok(OrthogonalMap { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        OrthogonalMap { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The image `φ(e_j)`, i.e. column `j`.
    pub fn column(&self, j: usize) -> HVector {
        HVector(self.matrix.column(j).iter().copied().collect())
    }

    pub fn apply(&self, x: &HVector) -> Result<HVector> {
        check_dims("orthogonal map", self.dim(), x.dim())?;
        Ok(self.apply_slice(x))
    }

    pub fn adjoint_apply(&self, x: &HVector) -> Result<HVector> {
        check_dims("orthogonal map", self.dim(), x.dim())?;
        Ok(self.adjoint_apply_slice(x))
    }

    pub(crate) fn apply_slice(&self, x: &[f64]) -> HVector {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.matrix[(i, j)] * xj;
                }
            }
        }
        HVector(out)
    }

    pub(crate) fn adjoint_apply_slice(&self, x: &[f64]) -> HVector {
        let n = self.dim();
        HVector((0..n).map(|j| dot(self.matrix.column(j).as_slice(), x)).collect())
    }

    pub fn adjoint(&self) -> OrthogonalMap {
        OrthogonalMap { matrix: self.matrix.transpose() }
    }
}

/// Haar-distributed orthogonal matrix: QR factorization of a standard
/// Gaussian matrix drawn from `ChaCha8Rng::seed_from_u64(seed)`, with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal(dim: usize, seed: u64) -> Result<OrthogonalMap> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    OrthogonalMap::new(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(c: &[f64]) -> HVector {
        HVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let x = v(&[3.0, 4.0]);
        let full = Subspace::full(2).unwrap();
        assert_eq!(project(&full, &x).unwrap(), x);
        let zero = Subspace::zero(2).unwrap();
        assert_eq!(project(&zero, &x).unwrap(), HVector::zeros(2));
        let line = Subspace::span(2, &[v(&[1.0, 0.0])]).unwrap();
        assert_eq!(project(&line, &x).unwrap(), v(&[3.0, 0.0]));
        let wrong = v(&[1.0, 2.0, 3.0]);
        assert!(project(&line, &wrong).is_err());
    }

    #[test]
    fn projection_idempotent_and_pythagorean() {
        let phi = random_orthogonal(6, 3).unwrap();
        let e = Subspace::span(6, &[phi.column(0), phi.column(2), phi.column(5)]).unwrap();
        let x = v(&[0.3, -1.2, 2.0, 0.1, 0.0, 5.5]);
        let p = project(&e, &x).unwrap();
        let pp = project(&e, &p).unwrap();
        for (a, b) in p.iter().zip(pp.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let r = x.sub(&p);
        assert_abs_diff_eq!(x.norm_sq(), p.norm_sq() + r.norm_sq(), epsilon = 1e-10);
    }

    #[test]
    fn q_form_examples() {
        let a = TraceClassOperator::new(2, vec![2.0], vec![v(&[1.0, 0.0])]).unwrap();
        assert_eq!(q_form(&a, &[0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(q_form(&a, &[1.0, 1.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert!(q_form(&a, &[1.0]).is_err());
        let b = TraceClassOperator::new(2, vec![4.0], vec![v(&[1.0, 0.0])]).unwrap();
        assert_abs_diff_eq!(a_norm(&b, &[1.0, 0.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(a_norm(&b, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn operator_invariants_rejected() {
        assert!(TraceClassOperator::new(2, vec![-1.0], vec![v(&[1.0, 0.0])]).is_err());
        assert!(TraceClassOperator::new(2, vec![1.0, 1.0], vec![v(&[1.0, 0.0]), v(&[1.0, 0.0])])
            .is_err());
        let a = TraceClassOperator::new(2, vec![1.0, 3.0], vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])])
            .unwrap();
        assert_eq!(a.eigenvalues(), &[3.0, 1.0]);
    }

    #[test]
    fn random_orthogonal_examples() {
        let q1 = random_orthogonal(1, 5).unwrap();
        assert_abs_diff_eq!(q1.matrix()[(0, 0)].abs(), 1.0, epsilon = 1e-15);
        let q = random_orthogonal(3, 7).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((q.matrix() * q.matrix().transpose() - id).amax() < 1e-10);
        assert_eq!(q, random_orthogonal(3, 7).unwrap());
        assert_ne!(q, random_orthogonal(3, 8).unwrap());
    }

    #[test]
    fn trace_is_basis_independent() {
        let a = TraceClassOperator::diagonal(&[1.0, 0.5, 0.25, 0.125]).unwrap();
        let phi = random_orthogonal(4, 11).unwrap();
        let total: f64 = (0..4).map(|j| q_form(&a, &phi.column(j)).unwrap()).sum();
        assert_abs_diff_eq!(total, a.trace(), epsilon = 1e-10);
    }

    #[test]
    fn conjugation_matches_composition() {
        let a = TraceClassOperator::from_symmetric(3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 0.3])
            .unwrap();
        let phi = random_orthogonal(3, 2).unwrap();
        let c = a.conjugate(&phi).unwrap();
        let x = v(&[0.4, -0.7, 1.3]);
        let lhs = q_form(&a, &phi.apply(&x).unwrap()).unwrap();
        assert_abs_diff_eq!(lhs, q_form(&c, &x).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn frame_groups_and_epsilon() {
        assert!(OrthonormalFrame::new(0, vec![]).is_err());
        assert!(OrthonormalFrame::new(3, vec![(0, 0)]).is_err());
        assert!(OrthonormalFrame::new(3, vec![(0, 1), (1, 2)]).is_err());
        let f = OrthonormalFrame::phase_space(2).unwrap();
        assert_eq!(f.gamma_groups(), vec![vec![0, 2], vec![1, 3]]);
        let eps = EpsilonSequence::new(vec![1.0, 0.5, 0.8, 0.5]).unwrap();
        assert_eq!(eps.gamma_values(&f), vec![1.0, 0.5]);
        assert_abs_diff_eq!(eps.sum(), 2.8, epsilon = 1e-12);
        assert!(EpsilonSequence::new(vec![-0.1]).is_err());
    }

    #[test]
    fn coordinate_chain_extends() {
        let e2 = Subspace::coordinate(5, 2).unwrap();
        let e4 = Subspace::coordinate(5, 4).unwrap();
        assert!(e4.extends(&e2));
        assert!(!e2.extends(&e4));
        assert_abs_diff_eq!(e2.distance(&[0.0, 0.0, 3.0, 4.0, 0.0]).unwrap(), 5.0, epsilon = 1e-15);
    }
}
