//! Qubit Pauli maps `X ↦ Σᵢ qᵢ σᵢ X σᵢ`.
//!
//! A Pauli map is diagonal in the Pauli basis, so it is stored by its Bloch
//! eigenvalues `λ = (λ₁, λ₂, λ₃)` (the action on σ₁, σ₂, σ₃; σ₀ is fixed).
//! Mixture weights are derived on demand through the sign transform
//! `λₖ = Σᵢ qᵢ s(k, i)` where `σᵢ σₖ σᵢ = s(k, i) σₖ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::qmat::ComplexMatrix;
use crate::{Error, Result};

/// Default tolerance for CP/positivity verdicts.
pub const VERDICT_TOL: f64 = 1e-10;

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrix σₖ, with σ₀ the identity.
pub fn sigma(k: usize) -> ComplexMatrix {
    let entries = match k {
        0 => [c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        1 => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        2 => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        3 => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        _ => panic!("Pauli label {k} out of range 0..=3"),
    };
    ComplexMatrix::from_fn(2, |i, j| entries[2 * i + j])
}

/// Coefficients `xₖ = Tr(σₖ X)/2` of a 2×2 matrix, so `X = Σ xₖ σₖ`.
pub fn bloch_coefficients(x: &ComplexMatrix) -> [Complex64; 4] {
    assert_eq!(x.dim(), 2, "Bloch coefficients need a 2x2 matrix");
    let (a, b, cc, d) = (x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
    let i = Complex64::i();
    [(a + d) * 0.5, (b + cc) * 0.5, (b - cc) * i * 0.5, (a - d) * 0.5]
}

/// Inverse of [`bloch_coefficients`].
pub fn from_bloch_coefficients(x: [Complex64; 4]) -> ComplexMatrix {
    let i = Complex64::i();
    let [x0, x1, x2, x3] = x;
    let entries = [x0 + x3, x1 - i * x2, x1 + i * x2, x0 - x3];
    ComplexMatrix::from_fn(2, |r, col| entries[2 * r + col])
}

/// Signs `s(k, i)` with `σᵢ σₖ σᵢ = s(k, i) σₖ`, for `k ∈ 1..=3`, `i ∈ 0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliSignTable {
    signs: [[i8; 4]; 3],
}

impl Default for PauliSignTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl PauliSignTable {
    pub const fn standard() -> Self {
        let mut signs = [[-1i8; 4]; 3];
        let mut k = 0;
        while k < 3 {
            signs[k][0] = 1;
            signs[k][k + 1] = 1;
            k += 1;
        }
        Self { signs }
    }

    /// Arbitrary table, not checked against the matrix identity. Meant for
    /// fault-injection fixtures; see [`PauliSignTable::validate`].
    pub const fn from_raw(signs: [[i8; 4]; 3]) -> Self {
        Self { signs }
    }

    /// `s(k, i)`; `k` is the axis 1..=3, `i` the conjugating label 0..=3.
    pub fn sign(&self, k: usize, i: usize) -> f64 {
        assert!((1..=3).contains(&k) && i < 4, "sign index ({k}, {i}) out of range");
        f64::from(self.signs[k - 1][i])
    }

    /// Checks `σᵢ σₖ σᵢ = s(k, i) σₖ` entrywise for every pair.
    pub fn validate(&self) -> Result<()> {
        for k in 1..=3 {
            for i in 0..4 {
                let si = sigma(i);
                let lhs = &(&si * &sigma(k)) * &si;
                let rhs = sigma(k).scale_real(self.sign(k, i));
                if lhs.max_abs_diff(&rhs) > 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "sign table entry s({k},{i}) contradicts the Pauli algebra"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bloch eigenvalues of the single conjugation φᵢ.
    pub fn conjugation_eigenvalues(&self, i: usize) -> [f64; 3] {
        [self.sign(1, i), self.sign(2, i), self.sign(3, i)]
    }
}

/// `s(k, i)` from the standard table.
pub fn pauli_sign(k: usize, i: usize) -> f64 {
    PauliSignTable::standard().sign(k, i)
}

/// `λₖ = Σᵢ qᵢ s(k, i)`.
pub fn eigenvalues_from_weights(q: [f64; 4]) -> [f64; 3] {
    eigenvalues_from_weights_with(&PauliSignTable::standard(), q)
}

pub fn eigenvalues_from_weights_with(table: &PauliSignTable, q: [f64; 4]) -> [f64; 3] {
    std::array::from_fn(|k| (0..4).map(|i| q[i] * table.sign(k + 1, i)).sum())
}

/// Inverse of [`eigenvalues_from_weights`]. The extended sign matrix (with a
/// row of ones for σ₀) is symmetric and squares to 4·𝟙.
pub fn weights_from_eigenvalues(lambda: [f64; 3]) -> [f64; 4] {
    weights_from_eigenvalues_with(&PauliSignTable::standard(), lambda)
}

pub fn weights_from_eigenvalues_with(table: &PauliSignTable, lambda: [f64; 3]) -> [f64; 4] {
    std::array::from_fn(|i| 0.25 * (1.0 + (1..=3).map(|k| table.sign(k, i) * lambda[k - 1]).sum::<f64>()))
}

/// Outcome of a CP or positivity test. `margin` is the signed distance to
/// the boundary of the property (negative means violated); a verdict within
/// `tol` of the boundary is flagged `marginal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub marginal: bool,
    pub margin: f64,
}

impl Verdict {
    pub fn from_margin(margin: f64, tol: f64) -> Self {
        Self { holds: margin >= -tol, marginal: margin.abs() <= tol, margin }
    }
}

/// Unital, trace-preserving qubit Pauli map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PauliMap {
    bloch: [f64; 3],
}

impl PauliMap {
    pub const IDENTITY: PauliMap = PauliMap { bloch: [1.0, 1.0, 1.0] };

    pub fn from_bloch(bloch: [f64; 3]) -> Self {
        Self { bloch }
    }

    /// Weights must sum to 1 within `1e-12`.
    pub fn from_weights(q: [f64; 4]) -> Result<Self> {
        Self::from_weights_with(&PauliSignTable::standard(), q)
    }

    pub fn from_weights_with(table: &PauliSignTable, q: [f64; 4]) -> Result<Self> {
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("Pauli weights sum to {total}, not 1")));
        }
        Ok(Self { bloch: eigenvalues_from_weights_with(table, q) })
    }

    /// The single conjugation φᵢ[X] = σᵢ X σᵢ.
    pub fn conjugation(i: usize) -> Self {
        Self::conjugation_with(&PauliSignTable::standard(), i)
    }

    pub fn conjugation_with(table: &PauliSignTable, i: usize) -> Self {
        Self { bloch: table.conjugation_eigenvalues(i) }
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn weights(&self) -> [f64; 4] {
        weights_from_eigenvalues(self.bloch)
    }

    /// `x₀𝟙 + Σ λₖ xₖ σₖ` for `X = x₀𝟙 + Σ xₖ σₖ`.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let [x0, x1, x2, x3] = bloch_coefficients(x);
        let [l1, l2, l3] = self.bloch;
        from_bloch_coefficients([x0, x1 * l1, x2 * l2, x3 * l3])
    }

    /// `Σᵢ qᵢ σᵢ X σᵢ`, evaluated with explicit matrix products.
    pub fn apply_mixture(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let q = self.weights();
        let mut out = ComplexMatrix::zeros(2);
        for (i, &w) in q.iter().enumerate() {
            let s = sigma(i);
            out = &out + &(&(&s * x) * &s).scale_real(w);
        }
        out
    }

    /// `self ∘ other`: Bloch eigenvalues multiply componentwise.
    pub fn compose(&self, other: &PauliMap) -> PauliMap {
        PauliMap { bloch: std::array::from_fn(|k| self.bloch[k] * other.bloch[k]) }
    }

    /// Choi state `(Λ ⊗ id)[|ψ₊⟩⟨ψ₊|]`, unit trace.
    pub fn choi(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = ComplexMatrix::zeros(2);
                unit[(i, j)] = c(0.5, 0.0);
                let img = self.apply(&unit);
                for a in 0..2 {
                    for b in 0..2 {
                        out[(2 * a + i, 2 * b + j)] += img[(a, b)];
                    }
                }
            }
        }
        out
    }

    /// CP iff every mixture weight is nonnegative.
    pub fn cp_verdict(&self, tol: f64) -> Verdict {
        let min_weight = self.weights().into_iter().fold(f64::INFINITY, f64::min);
        Verdict::from_margin(min_weight, tol)
    }

    /// Positive iff every `|λₖ| ≤ 1`.
    pub fn positivity_verdict(&self, tol: f64) -> Verdict {
        let max_abs = self.bloch.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        Verdict::from_margin(1.0 - max_abs, tol)
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.cp_verdict(tol).holds
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.positivity_verdict(tol).holds
    }
}

/// Weight convolution induced by `σᵢ σⱼ ∝ σ_{i⊕j}` (labels 0..3 with XOR as
/// the Klein four-group product).
pub fn compose_weights(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i ^ j] += a[i] * b[j];
        }
    }
    out
}
