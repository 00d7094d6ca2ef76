//! Dense complex matrices and the handful of spectral quantities the rest of
//! the crate needs.
//!
//! Storage is row-major `Vec<Complex64>`. Decompositions are delegated to
//! `faer`; everything else is written out by hand since the matrices involved
//! are small (the largest coarse-grained matrix has dimension 4096, and that
//! one is block diagonal).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `max |M - M†|` accepted by the eigensolvers.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in `[-CLAMP_WINDOW, 0)` are treated as roundoff and set to 0
/// before entropies are taken; anything more negative is an error.
pub const CLAMP_WINDOW: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Base of the logarithm used for entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    /// Convert a value measured in nats into this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "E" | "nat" | "nats" => Ok(LogBase::E),
            "2" | "bit" | "bits" => Ok(LogBase::Two),
            other => Err(Error::InvalidParameter(format!("unknown log base '{other}' (expected e or 2)"))),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBase::E => write!(f, "e"),
            LogBase::Two => write!(f, "2"),
        }
    }
}

/// `η(x) = -x ln x` with `η(0) = 0`.
#[inline]
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Build from row-major entries; `data.len()` must be a perfect square.
    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::DimensionMismatch(format!("{} entries do not form a square matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    /// `max_ij |M_ij - conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Hermitian and no eigenvalue below `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol.max(HERMITIAN_TOL)) {
            return false;
        }
        match hermitian_eigenvalues(self) {
            Ok(vals) => vals.last().is_none_or(|&v| v >= -tol),
            Err(_) => false,
        }
    }

    pub fn is_unit_trace(&self, tol: f64) -> bool {
        (self.trace() - ONE).norm() <= tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// Normalised pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes whose norm is 1 within `1e-12`.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("state vector has norm {norm}")));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("cannot normalise a zero vector".into()));
        }
        for z in &mut amps {
            *z /= norm;
        }
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), |i, j| self.amps[i] * self.amps[j].conj())
    }

    pub fn kron(&self, other: &StateVector) -> StateVector {
        let amps = self.amps.iter().flat_map(|a| other.amps.iter().map(move |b| a * b)).collect();
        StateVector { amps }
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order
/// and eigenvectors as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(e) V†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.dim();
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj()).sum())
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        (0..self.vectors.dim()).map(|i| self.vectors[(i, k)]).collect()
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    check_hermitian(m)?;
    let n = m.dim();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: ComplexMatrix::zeros(0) });
    }
    let evd = m.to_faer().self_adjoint_eigen(Side::Lower).map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer sorts ascending
    let values = (0..n).rev().map(|k| s[k].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, k| u[(i, n - 1 - k)]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues (descending) of a Hermitian matrix.
///
/// The exact sparsity pattern is used to split the matrix into its connected
/// diagonal blocks first; coarse-grained matrices for the reference POVM are
/// block diagonal with blocks far smaller than the full dimension.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    let n = m.dim();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                uf.union(i, j);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }

    let mut values = Vec::with_capacity(n);
    for block in &blocks {
        if block.len() == 1 {
            values.push(m[(block[0], block[0])].re);
            continue;
        }
        let sub = Mat::from_fn(block.len(), block.len(), |a, b| m[(block[a], block[b])]);
        let vals = sub.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        values.extend(vals);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Applies the clamping window to a spectrum: values in `[-1e-9, 0)` become
/// 0, anything below is rejected.
pub fn clamp_spectrum(values: &[f64]) -> Result<Vec<f64>> {
    values.iter().map(|&v| if v < -CLAMP_WINDOW { Err(Error::NotPsd(v)) } else { Ok(v.max(0.0)) }).collect()
}

/// `Σ η(eᵢ)` over a (clamped) spectrum.
pub fn entropy_of_spectrum(values: &[f64], base: LogBase) -> Result<f64> {
    let clamped = clamp_spectrum(values)?;
    Ok(base.from_nats(clamped.iter().map(|&v| eta(v)).sum()))
}

/// `S(ρ) = -Tr ρ log ρ`.
pub fn von_neumann_entropy(rho: &ComplexMatrix, base: LogBase) -> Result<f64> {
    let tr = rho.trace();
    if (tr - ONE).norm() > CLAMP_WINDOW {
        return Err(Error::InvalidParameter(format!("density matrix has trace {tr}")));
    }
    entropy_of_spectrum(&hermitian_eigenvalues(rho)?, base)
}

/// Sum of singular values.
///
/// Hermitian inputs go through the eigensolver; anything else through the
/// SVD. Returns NaN if the decomposition fails to converge.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.dim() == 0 {
        return 0.0;
    }
    if m.hermiticity_defect() <= 1e-14 * (1.0 + max_entry(m)) {
        return hermitian_eigenvalues(m).map(|v| v.iter().map(|x| x.abs()).sum()).unwrap_or(f64::NAN);
    }
    m.to_faer().singular_values().map(|s| s.iter().sum()).unwrap_or(f64::NAN)
}

fn max_entry(m: &ComplexMatrix) -> f64 {
    m.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(na * nb, |i, j| a[(i / nb, j / nb)] * b[(i % nb, j % nb)])
}

/// Trace out every tensor factor not listed in `keep`.
///
/// `dims` lists the factor dimensions, first factor most significant. The
/// kept factors appear in the output in their original order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factor dimensions {dims:?} multiply to {total}, matrix has dimension {}",
            m.dim()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!("factor index {bad} out of range for {} factors", dims.len())));
    }
    let kept: Vec<bool> = (0..dims.len()).map(|f| keep.contains(&f)).collect();
    let kept_dim: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let traced_dim = total / kept_dim;

    // full[k * traced_dim + t] = full index with kept part k and traced part t
    let mut full = vec![0usize; total];
    for idx in 0..total {
        let (mut rem, mut k, mut t) = (idx, 0usize, 0usize);
        let (mut kstride, mut tstride) = (1usize, 1usize);
        for (f, &d) in dims.iter().enumerate().rev() {
            let digit = rem % d;
            rem /= d;
            if kept[f] {
                k += digit * kstride;
                kstride *= d;
            } else {
                t += digit * tstride;
                tstride *= d;
            }
        }
        full[k * traced_dim + t] = idx;
    }

    Ok(ComplexMatrix::from_fn(kept_dim, |r, c| {
        (0..traced_dim).map(|t| m[(full[r * traced_dim + t], full[c * traced_dim + t])]).sum()
    }))
}

/// Standard purification `|√ρ⟩ = Σₐ √rₐ |rₐ⟩⊗|rₐ⟩` in the eigenbasis of ρ.
pub fn purify(rho: &ComplexMatrix) -> Result<StateVector> {
    let tr = rho.trace();
    if (tr - ONE).norm() > CLAMP_WINDOW {
        return Err(Error::InvalidParameter(format!("density matrix has trace {tr}")));
    }
    let eig = hermitian_eig(rho)?;
    let weights = clamp_spectrum(&eig.values)?;
    let d = rho.dim();
    let mut amps = vec![ZERO; d * d];
    for (a, &r) in weights.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let col = eig.column(a);
        let s = r.sqrt();
        for i in 0..d {
            for j in 0..d {
                amps[i * d + j] += s * col[i] * col[j];
            }
        }
    }
    StateVector::normalized(amps)
}

/// `d × k` matrix with orthonormal columns, Haar distributed (Gram-Schmidt on
/// complex Gaussian columns). Returned as row-major `d * k` entries.
pub fn random_isometry<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Vec<Complex64> {
    assert!(k <= d, "an isometry needs at least as many rows as columns");
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        for u in &cols {
            let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= overlap * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    let mut out = vec![ZERO; d * k];
    for (c, col) in cols.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            out[r * k + c] = *z;
        }
    }
    out
}

pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix { dim: d, data: random_isometry(d, d, rng) }
}

/// Random full-rank density matrix `G G† / Tr(G G†)` from a Ginibre `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    let mut rho = m.scale_real(1.0 / tr);
    // exact Hermitian symmetry
    for i in 0..d {
        rho[(i, i)].im = 0.0;
        for j in (i + 1)..d {
            rho[(j, i)] = rho[(i, j)].conj();
        }
    }
    rho
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let mut h = (&g + &g.adjoint()).scale_real(0.5);
    for i in 0..d {
        h[(i, i)].im = 0.0;
    }
    h
}
