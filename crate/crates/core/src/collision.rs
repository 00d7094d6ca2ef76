//! The qubit collisional model driven by the Markov environment.
//!
//! Each collision applies the controlled Pauli conjugation `φᵢ[X] = σᵢ X σᵢ`
//! selected by the current environment symbol. Repeated measurements with a
//! POVM `{X_a}` produce coarse-grained density matrices (CGDMs) indexed by
//! outcome words `a₀ … aₙ`; the row index of a word is `Σ aₖ |𝒳|^(n−k)`.
//!
//! Two routes are provided for the reference POVM ℱ at `ρ_S = 𝟙/2`: the
//! brute-force mixture over environment words, and the closed form whose
//! spectrum is `{pᵢ/4}` with each value repeated four times.

use num_complex::Complex64;
use rand::Rng;

use crate::env_chain::{decode_word, shannon_entropy, MarkovEnv, MAX_ENUMERATED_LENGTH};
use crate::pauli::{PauliMap, PauliSignTable};
use crate::qmat::{
    entropy_of_spectrum, hermitian_eig, hermitian_eigenvalues, kron, random_isometry, ComplexMatrix, LogBase,
};
use crate::{Error, Result};

/// Default bound on the dimension of a brute-force CGDM.
pub const DEFAULT_CAP: usize = 4096;

/// Largest `n` for which [`ClosedFormCgdm::matrix`] is materialized.
pub const CLOSED_FORM_MATRIX_MAX_N: usize = 3;

const COMPLETENESS_TOL: f64 = 1e-10;
const FULL_RANK_TOL: f64 = 1e-12;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type M2 = [Complex64; 4];

fn to_m2(x: &ComplexMatrix) -> M2 {
    [x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]]
}

fn mul2(a: &M2, b: &M2) -> M2 {
    [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    /// Checks `Σ X_a† X_a = 𝟙₂` within `1e-10`.
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter("a POVM needs at least one element".into()));
        }
        if let Some(x) = elements.iter().find(|x| x.dim() != 2) {
            return Err(Error::DimensionMismatch(format!("POVM element of dimension {}, expected 2", x.dim())));
        }
        let defect = completeness_defect(&elements);
        if defect > COMPLETENESS_TOL {
            return Err(Error::IncompletePovm(defect));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn completeness_defect(&self) -> f64 {
        completeness_defect(&self.elements)
    }
}

fn completeness_defect(elements: &[ComplexMatrix]) -> f64 {
    let mut sum = ComplexMatrix::zeros(2);
    for x in elements {
        sum = &sum + &(&x.adjoint() * x);
    }
    sum.max_abs_diff(&ComplexMatrix::identity(2))
}

/// `F_{a,a′} = √r_a |r_a⟩⟨r_{a′}|` in the eigenbasis of `ρ`, element index
/// `a·d + a′`. Diagonal inputs use the computational basis.
pub fn reference_povm(rho: &ComplexMatrix) -> Result<Povm> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("system state has dimension {}, expected 2", rho.dim())));
    }
    let d = rho.dim();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || rho[(i, j)] == ZERO));
    let (values, basis): (Vec<f64>, Vec<Vec<Complex64>>) = if diagonal {
        let basis = (0..d).map(|a| (0..d).map(|i| if i == a { Complex64::new(1.0, 0.0) } else { ZERO }).collect());
        ((0..d).map(|a| rho[(a, a)].re).collect(), basis.collect())
    } else {
        let eig = hermitian_eig(rho)?;
        let basis = (0..d).map(|a| eig.column(a)).collect();
        (eig.values, basis)
    };
    if let Some(&bad) = values.iter().find(|&&v| v <= FULL_RANK_TOL) {
        return Err(Error::RankDeficient(bad));
    }
    let mut elements = Vec::with_capacity(d * d);
    for a in 0..d {
        for a2 in 0..d {
            let s = values[a].sqrt();
            elements.push(ComplexMatrix::from_fn(d, |i, j| basis[a][i] * basis[a2][j].conj() * s));
        }
    }
    Povm::new(elements)
}

/// Haar-random POVM with `m` elements: the `2m × 2` isometry is cut into
/// consecutive `2 × 2` blocks.
pub fn random_povm<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Povm {
    let v = random_isometry(2 * m, 2, rng);
    let elements = (0..m).map(|a| ComplexMatrix::from_fn(2, |i, j| v[(2 * a + i) * 2 + j])).collect::<Vec<_>>();
    Povm::new(elements).expect("isometry blocks form a complete POVM")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interaction {
    /// `φᵢ[X] = σᵢ X σᵢ` selected by the environment symbol.
    #[default]
    ControlledPauli,
    /// Every collision acts as the identity.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionModel {
    rho_s: ComplexMatrix,
    sqrt_rho: M2,
    env: MarkovEnv,
    interaction: Interaction,
    signs: PauliSignTable,
    cap: usize,
}

impl CollisionModel {
    /// Model with `ρ_S = 𝟙/2` and the controlled-Pauli interaction.
    pub fn new(env: MarkovEnv) -> Self {
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sqrt_rho = [Complex64::new(r, 0.0), ZERO, ZERO, Complex64::new(r, 0.0)];
        Self {
            rho_s: half,
            sqrt_rho,
            env,
            interaction: Interaction::ControlledPauli,
            signs: PauliSignTable::standard(),
            cap: DEFAULT_CAP,
        }
    }

    /// Replaces the system state; it must be a full-rank density matrix.
    pub fn with_rho(mut self, rho: ComplexMatrix) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!("system state has dimension {}, expected 2", rho.dim())));
        }
        if !rho.is_unit_trace(1e-10) {
            return Err(Error::InvalidParameter(format!("system state has trace {}", rho.trace())));
        }
        let eig = hermitian_eig(&rho)?;
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NotPsd(min));
        }
        if min <= FULL_RANK_TOL {
            return Err(Error::RankDeficient(min));
        }
        let mut sqrt_rho = [ZERO; 4];
        for (k, &v) in eig.values.iter().enumerate() {
            let col = eig.column(k);
            for i in 0..2 {
                for j in 0..2 {
                    sqrt_rho[2 * i + j] += col[i] * col[j].conj() * v.sqrt();
                }
            }
        }
        self.sqrt_rho = sqrt_rho;
        self.rho_s = rho;
        Ok(self)
    }

    pub fn with_interaction(mut self, interaction: Interaction) -> Self {
        self.interaction = interaction;
        self
    }

    /// Sign table used when applying the conjugations φᵢ.
    pub fn with_sign_table(mut self, signs: PauliSignTable) -> Self {
        self.signs = signs;
        self
    }

    /// Dimension cap for [`cgdm_bruteforce`].
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn rho_s(&self) -> &ComplexMatrix {
        &self.rho_s
    }

    pub fn env(&self) -> &MarkovEnv {
        &self.env
    }

    pub fn interaction(&self) -> Interaction {
        self.interaction
    }

    pub fn sign_table(&self) -> &PauliSignTable {
        &self.signs
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn is_maximally_mixed(&self) -> bool {
        self.rho_s.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) <= 1e-12
    }

    /// Environment words with nonzero weight, as `(weight, word)`.
    fn weighted_words(&self, n: usize) -> Result<Vec<(f64, Vec<usize>)>> {
        if self.interaction == Interaction::Identity || n == 0 {
            return Ok(vec![(1.0, vec![0; n])]);
        }
        let dist = self.env.block_distribution(n)?;
        Ok(dist.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(idx, &w)| (w, decode_word(idx, n))).collect())
    }

    fn conjugation_signs(&self, i: usize) -> [f64; 3] {
        match self.interaction {
            Interaction::ControlledPauli => self.signs.conjugation_eigenvalues(i),
            Interaction::Identity => [1.0; 3],
        }
    }
}

/// `X^a_i = φ_{i_[1,n]}[X_{aₙ}] ··· φ_{i₁}[X_{a₁}] X_{a₀}` where
/// `φ_{i_[1,k]} = φ_{i₁} ∘ ··· ∘ φ_{i_k}`.
pub fn heisenberg_word(model: &CollisionModel, povm: &Povm, a: &[usize], i: &[usize]) -> Result<ComplexMatrix> {
    if a.len() != i.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} measurement labels need {} environment symbols, got {}",
            a.len(),
            a.len().saturating_sub(1),
            i.len()
        )));
    }
    if let Some(&bad) = a.iter().find(|&&x| x >= povm.len()) {
        return Err(Error::InvalidParameter(format!(
            "measurement label {bad} out of range for {} outcomes",
            povm.len()
        )));
    }
    if let Some(&bad) = i.iter().find(|&&x| x > 3) {
        return Err(Error::InvalidParameter(format!("environment symbol {bad} out of range 0..=3")));
    }
    let mut acc = povm.elements()[a[0]].clone();
    let mut g = [1.0; 3];
    for (k, &sym) in i.iter().enumerate() {
        let s = model.conjugation_signs(sym);
        g = std::array::from_fn(|j| g[j] * s[j]);
        let evolved = PauliMap::from_bloch(g).apply(&povm.elements()[a[k + 1]]);
        acc = &evolved * &acc;
    }
    Ok(acc)
}

/// A coarse-grained density matrix stored through factor rows `r` with
/// `ρ = Σ r r†`. Only nonzero row entries are kept.
#[derive(Debug, Clone)]
pub struct Cgdm {
    slots: usize,
    povm_size: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl Cgdm {
    /// Number of measurement slots (`n + 1` for `n` collisions).
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn povm_size(&self) -> usize {
        self.povm_size
    }

    pub fn dim(&self) -> usize {
        self.povm_size.pow(self.slots as u32)
    }

    /// Row index of an outcome word, first label most significant.
    pub fn index_of(&self, word: &[usize]) -> usize {
        word.iter().fold(0, |acc, &a| acc * self.povm_size + a)
    }

    pub fn word_of(&self, mut index: usize) -> Vec<usize> {
        let mut word = vec![0; self.slots];
        for slot in word.iter_mut().rev() {
            *slot = index % self.povm_size;
            index /= self.povm_size;
        }
        word
    }

    /// Dense matrix with entries `Σᵢ pᵢ Tr(ρ_S (X^b_i)† X^a_i)`.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim());
        for row in &self.rows {
            for &(a, ra) in row {
                for &(b, rb) in row {
                    if b >= a {
                        m[(a, b)] += ra * rb.conj();
                    }
                }
            }
        }
        for a in 0..m.dim() {
            m[(a, a)].im = 0.0;
            for b in (a + 1)..m.dim() {
                m[(b, a)] = m[(a, b)].conj();
            }
        }
        m
    }

    /// Eigenvalues, descending.
    ///
    /// Indices are grouped into the connected components of the row supports;
    /// each component is diagonalized on its own, through the smaller Gram
    /// matrix when it has fewer rows than indices.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let dim = self.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for row in &self.rows {
            if let Some(&(first, _)) = row.first() {
                for &(j, _) in &row[1..] {
                    let (ra, rb) = (find(&mut parent, first), find(&mut parent, j));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let mut block_of = vec![usize::MAX; dim];
        let mut local = vec![0usize; dim];
        let mut sizes: Vec<usize> = Vec::new();
        for i in 0..dim {
            let root = find(&mut parent, i);
            if block_of[root] == usize::MAX {
                block_of[root] = sizes.len();
                sizes.push(0);
            }
            let b = block_of[root];
            block_of[i] = b;
            local[i] = sizes[b];
            sizes[b] += 1;
        }
        let mut rows_by_block: Vec<Vec<&Vec<(usize, Complex64)>>> = vec![Vec::new(); sizes.len()];
        for row in self.rows.iter().filter(|r| !r.is_empty()) {
            rows_by_block[block_of[row[0].0]].push(row);
        }

        let mut values = Vec::with_capacity(dim);
        for (b, rows) in rows_by_block.iter().enumerate() {
            let size = sizes[b];
            let k = rows.len();
            if k == 0 {
                values.extend(std::iter::repeat_n(0.0, size));
                continue;
            }
            let block = if k < size {
                let dense: Vec<Vec<Complex64>> = rows
                    .iter()
                    .map(|row| {
                        let mut v = vec![ZERO; size];
                        for &(j, z) in row.iter() {
                            v[local[j]] = z;
                        }
                        v
                    })
                    .collect();
                values.extend(std::iter::repeat_n(0.0, size - k));
                hermitian_from_upper(k, |s, t| dense[s].iter().zip(&dense[t]).map(|(x, y)| x.conj() * y).sum())
            } else {
                let mut acc = vec![ZERO; size * size];
                for row in rows {
                    for &(a, ra) in row.iter() {
                        for &(c, rc) in row.iter() {
                            acc[local[a] * size + local[c]] += ra * rc.conj();
                        }
                    }
                }
                hermitian_from_upper(size, |s, t| acc[s * size + t])
            };
            values.extend(hermitian_eigenvalues(&block)?);
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }

    /// Von Neumann entropy of the spectrum.
    pub fn entropy(&self, base: LogBase) -> Result<f64> {
        entropy_of_spectrum(&self.spectrum()?, base)
    }
}

fn hermitian_from_upper(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n);
    for s in 0..n {
        m[(s, s)] = Complex64::new(f(s, s).re, 0.0);
        for t in (s + 1)..n {
            let z = f(s, t);
            m[(s, t)] = z;
            m[(t, s)] = z.conj();
        }
    }
    m
}

/// Brute-force CGDM for `n` collisions (`n + 1` measurement slots), summed
/// over all environment words with nonzero probability.
pub fn cgdm_bruteforce(model: &CollisionModel, povm: &Povm, n: usize) -> Result<Cgdm> {
    let m = povm.len();
    let dim = (m as u128).checked_pow(n as u32 + 1).unwrap_or(u128::MAX);
    if dim > model.cap as u128 {
        return Err(Error::CapExceeded { dim: usize::try_from(dim).unwrap_or(usize::MAX), cap: model.cap });
    }
    let dim = dim as usize;
    let elements: Vec<M2> = povm.elements().iter().map(to_m2).collect();
    let mut rows = Vec::new();
    for (weight, word) in model.weighted_words(n)? {
        let mut products: Vec<M2> = elements.clone();
        let mut g = [1.0; 3];
        for &sym in &word {
            let s = model.conjugation_signs(sym);
            g = std::array::from_fn(|j| g[j] * s[j]);
            let map = PauliMap::from_bloch(g);
            let evolved: Vec<M2> = povm.elements().iter().map(|x| to_m2(&map.apply(x))).collect();
            let mut next = Vec::with_capacity(products.len() * m);
            for y in &products {
                next.extend(evolved.iter().map(|e| mul2(e, y)));
            }
            products = next;
        }
        debug_assert_eq!(products.len(), dim);
        let scale = weight.sqrt();
        let mut word_rows: [Vec<(usize, Complex64)>; 4] = Default::default();
        for (a, y) in products.iter().enumerate() {
            let z = mul2(y, &model.sqrt_rho);
            for (c, &zc) in z.iter().enumerate() {
                if zc != ZERO {
                    word_rows[c].push((a, zc * scale));
                }
            }
        }
        rows.extend(word_rows.into_iter().filter(|r| !r.is_empty()));
    }
    Ok(Cgdm { slots: n + 1, povm_size: m, rows })
}

/// The n-qubit Pauli channel `𝕋ₙ = Σᵢ pᵢ φ_{i₁} ⊗ ··· ⊗ φ_{iₙ}`, stored as
/// word weights; the sign pattern of word `i` on qubit `k` is the Bloch
/// eigenvalue triple of `φ_{iₖ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TnChannel {
    n: usize,
    weights: Vec<f64>,
    signs: PauliSignTable,
}

pub fn tn_channel(env: &MarkovEnv, n: usize) -> Result<TnChannel> {
    tn_channel_capped(env, n, DEFAULT_CAP)
}

pub fn tn_channel_capped(env: &MarkovEnv, n: usize, cap: usize) -> Result<TnChannel> {
    let dim = 4u128.checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > cap as u128 {
        return Err(Error::CapExceeded { dim: usize::try_from(dim).unwrap_or(usize::MAX), cap });
    }
    Ok(TnChannel { n, weights: env.block_distribution(n)?, signs: PauliSignTable::standard() })
}

impl TnChannel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(weight, word)` pairs with nonzero weight.
    pub fn support(&self) -> Vec<(f64, Vec<usize>)> {
        self.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, &w)| (w, decode_word(i, self.n))).collect()
    }

    pub fn sign_pattern(&self, word_index: usize) -> Vec<[f64; 3]> {
        decode_word(word_index, self.n).into_iter().map(|i| self.signs.conjugation_eigenvalues(i)).collect()
    }

    /// Weights of the single-qubit channel acting on site `k` (0-based).
    pub fn marginal(&self, k: usize) -> [f64; 4] {
        assert!(k < self.n, "site {k} out of range for {} qubits", self.n);
        let stride = 4usize.pow((self.n - 1 - k) as u32);
        let mut out = [0.0; 4];
        for (idx, &w) in self.weights.iter().enumerate() {
            out[(idx / stride) % 4] += w;
        }
        out
    }

    /// `max_w |p_w − Π_k q_{w_k}|` for the one-step weights `q`.
    pub fn factorization_defect(&self, one_step: [f64; 4]) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(idx, &w)| {
                let prod = decode_word(idx, self.n).iter().fold(1.0, |acc, &i| acc * one_step[i]);
                (w - prod).abs()
            })
            .fold(0.0, f64::max)
    }

    /// The channel on a single qubit (`n = 1` only).
    pub fn as_pauli_map(&self) -> Result<PauliMap> {
        if self.n != 1 {
            return Err(Error::InvalidParameter(format!("a {}-qubit channel is not a single-qubit map", self.n)));
        }
        PauliMap::from_weights([self.weights[0], self.weights[1], self.weights[2], self.weights[3]])
    }
}

/// Closed-form CGDM for the reference POVM at `ρ_S = 𝟙/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormCgdm {
    n: usize,
    weights: Vec<f64>,
}

pub fn cgdm_closed_form(model: &CollisionModel, n: usize) -> Result<ClosedFormCgdm> {
    if !model.is_maximally_mixed() {
        return Err(Error::InvalidParameter(
            "the closed-form path is only available for the maximally mixed system state".into(),
        ));
    }
    if n > MAX_ENUMERATED_LENGTH {
        return Err(Error::CapExceeded { dim: 4usize.pow(n as u32), cap: 4usize.pow(MAX_ENUMERATED_LENGTH as u32) });
    }
    let weights = match model.interaction() {
        Interaction::ControlledPauli => model.env().block_distribution(n)?,
        Interaction::Identity => {
            let mut w = vec![0.0; 4usize.pow(n as u32)];
            w[0] = 1.0;
            w
        }
    };
    Ok(ClosedFormCgdm { n, weights })
}

impl ClosedFormCgdm {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        4 * self.weights.len()
    }

    /// `{pᵢ/4}` with each value four times, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.weights.iter().flat_map(|&w| [0.25 * w; 4]).collect();
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    /// `2 log 2 + H(π_[1,n])`.
    pub fn entropy(&self, base: LogBase) -> f64 {
        base.from_nats(2.0 * std::f64::consts::LN_2 + shannon_entropy(&self.weights))
    }

    /// `ρ_S ⊗ ρ_S ⊗ Σᵢ pᵢ |ψᵢ⟩⟨ψᵢ|` with `|ψᵢ⟩ = (σ_{i₁} ⊗ 𝟙)|ψ₊⟩ ⊗ ··· ⊗ (σ_{iₙ} ⊗ 𝟙)|ψ₊⟩`.
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        if self.n > CLOSED_FORM_MATRIX_MAX_N {
            return Err(Error::CapExceeded { dim: self.dim(), cap: 4usize.pow(CLOSED_FORM_MATRIX_MAX_N as u32 + 1) });
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let pair: Vec<Vec<Complex64>> = (0..4)
            .map(|i| {
                let s = crate::pauli::sigma(i);
                // (σᵢ ⊗ 𝟙)(|00⟩ + |11⟩)/√2, basis index 2·x + y
                (0..4).map(|xy| s[(xy / 2, xy % 2)] * h).collect()
            })
            .collect();
        let dim_env = self.weights.len();
        let mut env_part = ComplexMatrix::zeros(dim_env);
        for (idx, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let psi = decode_word(idx, self.n).into_iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, i| {
                acc.iter().flat_map(|&x| pair[i].iter().map(move |&y| x * y)).collect()
            });
            for a in 0..dim_env {
                if psi[a] == ZERO {
                    continue;
                }
                for b in 0..dim_env {
                    env_part[(a, b)] += psi[a] * psi[b].conj() * w;
                }
            }
        }
        Ok(kron(&ComplexMatrix::identity(4).scale_real(0.25), &env_part))
    }
}

/// `Λₙ = Σᵢ pᵢ φ_{i_[1,n]}` through signed transfer matrices:
/// `λₖ(n) = 𝟙ᵀ (Dₖ T)^{n−1} Dₖ p`. `Λ₀` is the identity.
pub fn reduced_dynamics(env: &MarkovEnv, n: usize) -> PauliMap {
    reduced_dynamics_with(env, &PauliSignTable::standard(), n)
}

pub fn reduced_dynamics_with(env: &MarkovEnv, signs: &PauliSignTable, n: usize) -> PauliMap {
    *reduced_dynamics_trajectory_with(env, signs, n).last().expect("trajectory contains step 0")
}

/// `Λ₀, Λ₁, …, Λ_horizon`.
pub fn reduced_dynamics_trajectory(env: &MarkovEnv, horizon: usize) -> Vec<PauliMap> {
    reduced_dynamics_trajectory_with(env, &PauliSignTable::standard(), horizon)
}

pub fn reduced_dynamics_trajectory_with(env: &MarkovEnv, signs: &PauliSignTable, horizon: usize) -> Vec<PauliMap> {
    let t = env.transition();
    let p = env.stationary();
    let mut out = vec![PauliMap::IDENTITY];
    if horizon == 0 {
        return out;
    }
    let mut v: [[f64; 4]; 3] = std::array::from_fn(|k| std::array::from_fn(|i| signs.sign(k + 1, i) * p[i]));
    for step in 1..=horizon {
        if step > 1 {
            v = std::array::from_fn(|k| {
                std::array::from_fn(|i| signs.sign(k + 1, i) * (0..4).map(|j| t[i][j] * v[k][j]).sum::<f64>())
            });
        }
        out.push(PauliMap::from_bloch(std::array::from_fn(|k| v[k].iter().sum())));
    }
    out
}

/// Largest `n` accepted by [`reduced_dynamics_bruteforce`].
pub const REDUCED_DYNAMICS_BRUTEFORCE_MAX_N: usize = 8;

/// `Λₙ` by summing `pᵢ Πⱼ s(k, iⱼ)` over all `4ⁿ` words.
pub fn reduced_dynamics_bruteforce(env: &MarkovEnv, n: usize) -> Result<PauliMap> {
    if n > REDUCED_DYNAMICS_BRUTEFORCE_MAX_N {
        return Err(Error::CapExceeded {
            dim: 4usize.pow(n as u32),
            cap: 4usize.pow(REDUCED_DYNAMICS_BRUTEFORCE_MAX_N as u32),
        });
    }
    let signs = PauliSignTable::standard();
    let mut bloch = [0.0; 3];
    for (idx, &w) in env.block_distribution(n)?.iter().enumerate() {
        for (k, b) in bloch.iter_mut().enumerate() {
            *b += w * decode_word(idx, n).iter().map(|&i| signs.sign(k + 1, i)).product::<f64>();
        }
    }
    Ok(PauliMap::from_bloch(bloch))
}
