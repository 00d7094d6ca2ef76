//! Divisibility of the reduced dynamics and trace-distance revivals.
//!
//! The one-step propagators `Λ_{n−1,n}` of a Pauli dynamics are again Pauli
//! maps, with Bloch eigenvalues `μₖ = λₖ(n)/λₖ(n−1)`. When an axis collapses
//! (`λₖ(m) = 0`) the propagator is taken on the support of `Λₘ`:
//!
//! * `λₖ(m) = 0` and `λₖ(n) = 0`: the axis is in the kernel of both maps and
//!   `μₖ = 0` (the Moore–Penrose choice `Λₙ ∘ Λₘ⁺`);
//! * `λₖ(m) = 0` but `λₖ(n) ≠ 0`: no map `V` with `Λₙ = V ∘ Λₘ` exists and the
//!   propagator is [`Propagator::NonInvertible`].
//!
//! Positivity of `V ⊗ V` and of `V ⊗ id` is decided by a seeded multi-start
//! search for the smallest output eigenvalue over pure inputs
//! ([`block_positivity_min`]), short-circuited by the exact implications
//! `V` CP ⇒ `V ⊗ V` positive and `V` not positive ⇒ `V ⊗ V` not positive.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::collision::reduced_dynamics_trajectory;
use crate::env_chain::{EnvParams, MarkovEnv};
use crate::pauli::{from_bloch_coefficients, sigma, PauliMap, Verdict, VERDICT_TOL};
use crate::qmat::{hermitian_eig, trace_norm, ComplexMatrix, StateVector};
use crate::{Error, Result};

/// Cutoff on `|λₖ(m)|` below which an axis counts as collapsed.
pub const INVERTIBILITY_EPS: f64 = 1e-12;
pub const DEFAULT_HORIZON: usize = 50;
pub const DEFAULT_RESTARTS: usize = 64;
/// Tolerance on optimizer-based verdicts.
pub const OPTIMIZER_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 300;
const CONVERGENCE: f64 = 1e-13;
const NET_FACTOR: usize = 2;
const CACHE_RESOLUTION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Propagator {
    /// Every axis of `Λₘ` is invertible.
    Regular { map: PauliMap },
    /// Some axes lie in the kernel of both `Λₘ` and `Λₙ`; those get `μₖ = 0`.
    KernelPreserving { map: PauliMap, kernel: [bool; 3] },
    /// `Λₙ` is nonzero on an axis that `Λₘ` annihilates (`true` entries).
    NonInvertible { zeros: [bool; 3] },
}

impl Propagator {
    pub fn map(&self) -> Option<PauliMap> {
        match self {
            Propagator::Regular { map } | Propagator::KernelPreserving { map, .. } => Some(*map),
            Propagator::NonInvertible { .. } => None,
        }
    }

    /// Intertwiner `V` with `Λₙ = V ∘ Λₘ`, restricted to the support of `Λₘ`.
    pub fn between(lm: &PauliMap, ln: &PauliMap) -> Propagator {
        let (a, b) = (lm.bloch(), ln.bloch());
        let collapsed: [bool; 3] = std::array::from_fn(|k| a[k].abs() < INVERTIBILITY_EPS);
        let zeros: [bool; 3] = std::array::from_fn(|k| collapsed[k] && b[k].abs() >= INVERTIBILITY_EPS);
        if zeros.iter().any(|&z| z) {
            return Propagator::NonInvertible { zeros };
        }
        let map = PauliMap::from_bloch(std::array::from_fn(|k| if collapsed[k] { 0.0 } else { b[k] / a[k] }));
        if collapsed.iter().any(|&c| c) {
            Propagator::KernelPreserving { map, kernel: collapsed }
        } else {
            Propagator::Regular { map }
        }
    }
}

/// `Λ_{m,n}` for `0 ≤ m < n`, with `Λ₀ = id`.
pub fn propagator(env: &MarkovEnv, m: usize, n: usize) -> Result<Propagator> {
    if m >= n {
        return Err(Error::InvalidParameter(format!("propagator needs m < n, got m={m}, n={n}")));
    }
    let traj = reduced_dynamics_trajectory(env, n);
    Ok(Propagator::between(&traj[m], &traj[n]))
}

/// A linear map on operators of `ℂ^{d₁} ⊗ ℂ^{d₂}`.
pub trait BipartiteMap {
    fn dims(&self) -> (usize, usize);
    fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix;
    /// Hilbert–Schmidt adjoint.
    fn apply_adjoint(&self, x: &ComplexMatrix) -> ComplexMatrix;

    /// Allocation-free action on two-qubit operators, when available.
    fn image4(&self, _x: &Block4, _adjoint: bool) -> Option<Block4> {
        None
    }
}

/// Row-major 4×4 complex block.
pub type Block4 = [[Complex64; 4]; 4];

/// `V₁ ⊗ V₂` for two qubit Pauli maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliProductMap {
    pub left: PauliMap,
    pub right: PauliMap,
}

impl PauliProductMap {
    pub fn new(left: PauliMap, right: PauliMap) -> Self {
        Self { left, right }
    }
}

impl BipartiteMap for PauliProductMap {
    fn dims(&self) -> (usize, usize) {
        (2, 2)
    }

    fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let block: Block4 = std::array::from_fn(|i| std::array::from_fn(|j| x[(i, j)]));
        let out = self.image4(&block, false).expect("Pauli products act on two qubits");
        ComplexMatrix::from_fn(4, |i, j| out[i][j])
    }

    fn image4(&self, x: &Block4, _adjoint: bool) -> Option<Block4> {
        let mut m: [Complex64; 16] = std::array::from_fn(|k| x[k / 4][k % 4]);
        apply_on_qubit(&mut m, self.left.bloch(), 0);
        apply_on_qubit(&mut m, self.right.bloch(), 1);
        Some(std::array::from_fn(|i| std::array::from_fn(|j| m[4 * i + j])))
    }

    fn apply_adjoint(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.apply(x)
    }
}

/// Applies the Pauli map with Bloch eigenvalues `l` to one qubit of a 4×4
/// row-major operator, using `Λ(|0⟩⟨0|) = a|0⟩⟨0| + b|1⟩⟨1|` and
/// `Λ(|0⟩⟨1|) = c|0⟩⟨1| + e|1⟩⟨0|` with `a, b = (1 ± λ₃)/2`, `c, e = (λ₁ ± λ₂)/2`.
fn apply_on_qubit(m: &mut [Complex64; 16], l: [f64; 3], qubit: usize) {
    let (a, b) = (0.5 * (1.0 + l[2]), 0.5 * (1.0 - l[2]));
    let (c, e) = (0.5 * (l[0] + l[1]), 0.5 * (l[0] - l[1]));
    let idx = |i: usize, j: usize, k: usize, l: usize| {
        // i, j on the acted qubit; k, l on the other one
        if qubit == 0 {
            4 * (2 * i + k) + 2 * j + l
        } else {
            4 * (2 * k + i) + 2 * l + j
        }
    };
    for k in 0..2 {
        for l2 in 0..2 {
            let (x00, x11) = (m[idx(0, 0, k, l2)], m[idx(1, 1, k, l2)]);
            let (x01, x10) = (m[idx(0, 1, k, l2)], m[idx(1, 0, k, l2)]);
            m[idx(0, 0, k, l2)] = x00 * a + x11 * b;
            m[idx(1, 1, k, l2)] = x00 * b + x11 * a;
            m[idx(0, 1, k, l2)] = x01 * c + x10 * e;
            m[idx(1, 0, k, l2)] = x10 * c + x01 * e;
        }
    }
}

/// Lowest eigenpair of a 4×4 Hermitian matrix by cyclic complex Jacobi.
fn lowest_eigenpair4(mut m: Block4) -> (f64, [Complex64; 4]) {
    let mut v = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    let scale: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let floor = 1e-15 * scale.max(f64::MIN_POSITIVE);
    for _sweep in 0..30 {
        let off: f64 = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).map(|(i, j)| m[i][j].norm_sqr()).sum();
        if off.sqrt() <= floor {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let mag = m[p][q].norm();
                if mag <= 1e-3 * floor {
                    continue;
                }
                let phase = m[p][q] / mag;
                let zeta = (m[q][q].re - m[p][p].re) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane
                let u = [[Complex64::new(c, 0.0), Complex64::new(s, 0.0)], [phase.conj() * -s, phase.conj() * c]];
                for row in m.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * u[0][0] + xq * u[1][0];
                    row[q] = xp * u[0][1] + xq * u[1][1];
                }
                for k in 0..4 {
                    let (xp, xq) = (m[p][k], m[q][k]);
                    m[p][k] = u[0][0].conj() * xp + u[1][0].conj() * xq;
                    m[q][k] = u[0][1].conj() * xp + u[1][1].conj() * xq;
                }
                m[p][q] = Complex64::new(0.0, 0.0);
                m[q][p] = Complex64::new(0.0, 0.0);
                m[p][p].im = 0.0;
                m[q][q].im = 0.0;
                for row in v.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * u[0][0] + xq * u[1][0];
                    row[q] = xp * u[0][1] + xq * u[1][1];
                }
            }
        }
    }
    let k = (0..4).min_by(|&i, &j| m[i][i].re.total_cmp(&m[j][j].re)).expect("four diagonal entries");
    (m[k][k].re, std::array::from_fn(|i| v[i][k]))
}

/// Arbitrary map given by closures, for tests and ad hoc checks.
pub struct FnMap<F, G> {
    pub dims: (usize, usize),
    pub forward: F,
    pub adjoint: G,
}

impl<F, G> BipartiteMap for FnMap<F, G>
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
    G: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        (self.forward)(x)
    }

    fn apply_adjoint(&self, x: &ComplexMatrix) -> ComplexMatrix {
        (self.adjoint)(x)
    }
}

#[derive(Debug, Clone)]
pub struct BlockPositivityOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stop as soon as a value below this is found.
    pub stop_below: Option<f64>,
    /// Inputs tried before the random starts.
    pub starts: Vec<StateVector>,
}

impl Default for BlockPositivityOptions {
    fn default() -> Self {
        Self { restarts: DEFAULT_RESTARTS, seed: 0, max_iterations: MAX_ITERATIONS, stop_below: None, starts: vec![] }
    }
}

#[derive(Debug, Clone)]
pub struct BlockPositivity {
    /// Smallest `⟨y|Φ(|x⟩⟨x|)|y⟩` found; an upper bound on the true minimum.
    pub min: f64,
    /// Input attaining `min`.
    pub input: StateVector,
    pub evaluations: usize,
}

/// Minimum of `λ_min(Φ(|x⟩⟨x|))` over unit `x`, by alternating minimization
/// from `restarts` seeded random starts, any supplied starts, and the best
/// point of a random net.
pub fn block_positivity_min(map: &dyn BipartiteMap, restarts: usize, seed: u64) -> Result<BlockPositivity> {
    block_positivity_search(map, &BlockPositivityOptions { restarts, seed, ..Default::default() })
}

pub fn block_positivity_search(map: &dyn BipartiteMap, opts: &BlockPositivityOptions) -> Result<BlockPositivity> {
    let (d1, d2) = map.dims();
    let d = d1 * d2;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_state = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        normalize(
            (0..d)
                .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                .collect(),
        )
    };

    let mut evaluations = 0;
    let mut lowest = |x: &[Complex64], adjoint: bool| -> Result<(f64, Vec<Complex64>)> {
        evaluations += 1;
        if d == 4 {
            let proj: Block4 = std::array::from_fn(|i| std::array::from_fn(|j| x[i] * x[j].conj()));
            if let Some(mut image) = map.image4(&proj, adjoint) {
                for i in 0..4 {
                    image[i][i].im = 0.0;
                    for j in (i + 1)..4 {
                        let z = (image[i][j] + image[j][i].conj()) * 0.5;
                        image[i][j] = z;
                        image[j][i] = z.conj();
                    }
                }
                let (value, vector) = lowest_eigenpair4(image);
                return Ok((value, normalize(vector.to_vec())));
            }
        }
        let proj = ComplexMatrix::from_fn(d, |i, j| x[i] * x[j].conj());
        let image = if adjoint { map.apply_adjoint(&proj) } else { map.apply(&proj) };
        let herm = (&image + &image.adjoint()).scale_real(0.5);
        let eig = hermitian_eig(&herm)?;
        Ok((eig.values[d - 1], eig.column(d - 1)))
    };

    let mut best: Option<(f64, Vec<Complex64>)> = None;
    let stop = |v: f64| opts.stop_below.is_some_and(|s| v < s);

    // coarse net: keep its best point as an extra start
    let mut net_best: Option<(f64, Vec<Complex64>)> = None;
    for _ in 0..NET_FACTOR * opts.restarts {
        let x = random_state(&mut rng);
        let (v, _) = lowest(&x, false)?;
        if net_best.as_ref().is_none_or(|(b, _)| v < *b) {
            net_best = Some((v, x));
        }
    }
    let mut starts: Vec<Vec<Complex64>> = opts.starts.iter().map(|s| s.amplitudes().to_vec()).collect();
    if let Some((_, x)) = net_best {
        starts.push(x);
    }
    let random_starts: Vec<Vec<Complex64>> = (0..opts.restarts).map(|_| random_state(&mut rng)).collect();
    starts.extend(random_starts);

    for mut x in starts {
        if x.len() != d {
            return Err(Error::DimensionMismatch(format!("start of dimension {}, map acts on {d}", x.len())));
        }
        let mut prev = f64::INFINITY;
        for _ in 0..opts.max_iterations.max(1) {
            let (_, y) = lowest(&x, false)?;
            let (v, x_next) = lowest(&y, true)?;
            x = x_next;
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x.clone()));
            }
            if stop(v) || prev - v < CONVERGENCE {
                break;
            }
            prev = v;
        }
        if best.as_ref().is_some_and(|(b, _)| stop(*b)) {
            break;
        }
    }
    let (min, input) = best.ok_or_else(|| Error::InvalidParameter("block positivity search needs a start".into()))?;
    Ok(BlockPositivity { min, input: StateVector::normalized(input)?, evaluations })
}

fn normalize(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Analytic divisibility thresholds on `Δ`, available when `A_{p,r} > 0` and
/// `p > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub a: f64,
    /// `2Δ ≤ A r/p`
    pub delta_cp: Option<f64>,
    /// `2Δ ≤ A (1 + r/p − (1 − √(1 − 4p(1 − 2p)))/2p)`
    pub delta_tensor_p: Option<f64>,
    /// `2Δ ≤ A (1 + r/p)`
    pub delta_p: Option<f64>,
}

pub fn analytic_thresholds(p: f64, r: f64) -> Thresholds {
    let a = 1.0 - 2.0 * (p + r);
    if a <= 0.0 || p <= 0.0 {
        return Thresholds { a, delta_cp: None, delta_tensor_p: None, delta_p: None };
    }
    let s = (1.0 - 4.0 * p * (1.0 - 2.0 * p)).sqrt();
    Thresholds {
        a,
        delta_cp: Some(0.5 * a * r / p),
        delta_tensor_p: Some(0.5 * a * (1.0 + r / p - (1.0 - s) / (2.0 * p))),
        delta_p: Some(0.5 * a * (1.0 + r / p)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropertyVerdict {
    pub holds: bool,
    /// Some step sits within the tolerance of the boundary.
    pub marginal: bool,
    /// Smallest margin over all steps (negative means violated).
    pub worst_margin: f64,
    pub first_failure_step: Option<usize>,
}

impl PropertyVerdict {
    fn new() -> Self {
        Self { holds: true, marginal: false, worst_margin: f64::INFINITY, first_failure_step: None }
    }

    fn record(&mut self, step: usize, v: Verdict) {
        self.marginal |= v.marginal;
        self.worst_margin = self.worst_margin.min(v.margin);
        if !v.holds {
            self.holds = false;
            self.first_failure_step.get_or_insert(step);
        }
    }

    fn fail(&mut self, step: usize) {
        self.holds = false;
        self.worst_margin = f64::NEG_INFINITY;
        self.first_failure_step.get_or_insert(step);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Revival {
    pub from_step: usize,
    pub to_step: usize,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDistanceTrajectory {
    /// `values[n] = ½‖Λₙ[ρ₁ − ρ₂]‖₁`, `n = 0..=n_max`.
    pub values: Vec<f64>,
    pub revivals: Vec<Revival>,
}

/// Trace distance of the evolved pair; a revival is flagged whenever
/// `value(n+1) > value(n) + tol`.
pub fn trace_distance_trajectory(
    env: &MarkovEnv,
    rho1: &ComplexMatrix,
    rho2: &ComplexMatrix,
    n_max: usize,
    tol: f64,
) -> Result<TraceDistanceTrajectory> {
    for rho in [rho1, rho2] {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!("state of dimension {}, expected 2", rho.dim())));
        }
        if !rho.is_hermitian(1e-10) || !rho.is_unit_trace(1e-10) || !rho.is_psd(1e-10) {
            return Err(Error::InvalidParameter("trace distance needs two density matrices".into()));
        }
    }
    let diff = rho1 - rho2;
    let values: Vec<f64> =
        reduced_dynamics_trajectory(env, n_max).iter().map(|l| 0.5 * trace_norm(&l.apply(&diff))).collect();
    let revivals = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + tol)
        .map(|(n, w)| Revival { from_step: n, to_step: n + 1, increase: w[1] - w[0] })
        .collect();
    Ok(TraceDistanceTrajectory { values, revivals })
}

/// `½(𝟙 ± σₖ)`.
pub fn axis_states(k: usize) -> (ComplexMatrix, ComplexMatrix) {
    let id = ComplexMatrix::identity(2);
    let s = sigma(k);
    ((&id + &s).scale_real(0.5), (&id - &s).scale_real(0.5))
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub horizon: usize,
    /// Tolerance for the exact CP and positivity criteria.
    pub tol: f64,
    /// Tolerance for optimizer-based verdicts.
    pub optimizer_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            tol: VERDICT_TOL,
            optimizer_tol: OPTIMIZER_TOL,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticAgreement {
    pub cp: Option<bool>,
    pub tensor_p: Option<bool>,
    pub p: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityReport {
    pub params: EnvParams,
    pub horizon: usize,
    pub cp_divisible: PropertyVerdict,
    pub tensor_p_divisible: PropertyVerdict,
    pub p_divisible: PropertyVerdict,
    pub gns_p_divisible: PropertyVerdict,
    pub thresholds: Thresholds,
    /// Numeric verdict equals `Δ ≤ threshold` (None without a threshold).
    pub agreement: AnalyticAgreement,
    /// Choi spectra agreed with the mixture-weight CP test at every step.
    pub choi_cross_check: bool,
    /// Steps whose propagator used the kernel convention.
    pub kernel_steps: Vec<usize>,
    /// Steps whose propagator does not exist.
    pub non_invertible_steps: Vec<usize>,
    /// Revivals of axis-aligned state pairs up to the horizon.
    pub revivals: Vec<Revival>,
    /// `max_k |μₖ(N) − μₖ(N−1)|` over the last two regular steps.
    pub convergence: f64,
    pub notes: Vec<String>,
}

impl DivisibilityReport {
    /// Earliest failing step over all four properties.
    pub fn first_failure_step(&self) -> Option<usize> {
        [self.cp_divisible, self.tensor_p_divisible, self.p_divisible, self.gns_p_divisible]
            .iter()
            .filter_map(|v| v.first_failure_step)
            .min()
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the optimizer, a pure function of the run seed, the check kind,
/// and the cache key of the propagator.
fn seed_for(seed: u64, kind: u64, key: [i64; 3]) -> u64 {
    key.iter().fold(mix(seed ^ mix(kind)), |acc, &m| mix(acc ^ m as u64))
}

/// Bloch eigenvalues on a 1e-12 lattice; optimizer minima move by at most a
/// comparable amount between maps sharing a key.
fn cache_key(mu: [f64; 3]) -> [i64; 3] {
    mu.map(|m| (m * CACHE_RESOLUTION).round() as i64)
}

fn bell_states() -> Vec<StateVector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64| Complex64::new(re, 0.0);
    let z = c(0.0);
    vec![
        StateVector::new(vec![c(h), z, z, c(h)]).unwrap(),
        StateVector::new(vec![c(h), z, z, c(-h)]).unwrap(),
        StateVector::new(vec![z, c(h), c(h), z]).unwrap(),
        StateVector::new(vec![z, c(h), c(-h), z]).unwrap(),
        StateVector::new(vec![c(1.0), z, z, z]).unwrap(),
    ]
}

/// Memoized optimizer runs keyed on the quantized propagator eigenvalues.
struct Optimizer<'a> {
    opts: &'a ClassifyOptions,
    cache: HashMap<(u64, [i64; 3]), f64>,
}

impl Optimizer<'_> {
    fn min(&mut self, kind: u64, v: &PauliMap) -> Result<f64> {
        let mu = v.bloch();
        let key = (kind, cache_key(mu));
        if let Some(&m) = self.cache.get(&key) {
            return Ok(m);
        }
        let right = if kind == 0 { *v } else { PauliMap::IDENTITY };
        let map = PauliProductMap::new(*v, right);
        let search = BlockPositivityOptions {
            restarts: self.opts.restarts,
            seed: seed_for(self.opts.seed, kind, key.1),
            max_iterations: MAX_ITERATIONS,
            stop_below: Some(-self.opts.optimizer_tol),
            starts: bell_states(),
        };
        let m = block_positivity_search(&map, &search)?.min;
        self.cache.insert(key, m);
        Ok(m)
    }
}

/// Numeric divisibility classification over steps `1..=horizon`.
pub fn classify(env: &MarkovEnv, opts: &ClassifyOptions) -> Result<DivisibilityReport> {
    let params = env.params();
    let traj = reduced_dynamics_trajectory(env, opts.horizon);
    let mut cp = PropertyVerdict::new();
    let mut tensor = PropertyVerdict::new();
    let mut pos = PropertyVerdict::new();
    let mut gns = PropertyVerdict::new();
    let mut choi_cross_check = true;
    let mut kernel_steps = Vec::new();
    let mut non_invertible_steps = Vec::new();
    let mut notes = Vec::new();
    let mut optimizer = Optimizer { opts, cache: HashMap::new() };
    let mut regular: Vec<[f64; 3]> = Vec::new();

    for n in 1..=opts.horizon {
        let prop = Propagator::between(&traj[n - 1], &traj[n]);
        let v = match prop {
            Propagator::NonInvertible { .. } => {
                non_invertible_steps.push(n);
                for verdict in [&mut cp, &mut tensor, &mut pos, &mut gns] {
                    verdict.fail(n);
                }
                continue;
            }
            Propagator::KernelPreserving { map, .. } => {
                kernel_steps.push(n);
                map
            }
            Propagator::Regular { map } => {
                regular.push(map.bloch());
                map
            }
        };

        let cp_v = v.cp_verdict(opts.tol);
        let choi_min = crate::qmat::hermitian_eigenvalues(&v.choi())?.last().copied().unwrap_or(0.0);
        // Choi state has unit trace, so its eigenvalues are the mixture weights
        if (choi_min >= -opts.tol) != cp_v.holds {
            choi_cross_check = false;
        }
        cp.record(n, cp_v);

        let p_v = v.positivity_verdict(opts.tol);
        pos.record(n, p_v);

        let tensor_v = if cp_v.holds && !cp_v.marginal {
            Verdict::from_margin(f64::INFINITY, opts.optimizer_tol)
        } else if !p_v.holds {
            Verdict::from_margin(f64::NEG_INFINITY, opts.optimizer_tol)
        } else {
            Verdict::from_margin(optimizer.min(0, &v)?, opts.optimizer_tol)
        };
        tensor.record(n, tensor_v);

        gns.record(n, Verdict::from_margin(optimizer.min(1, &v)?, opts.optimizer_tol));
    }

    for verdict in [&mut cp, &mut tensor, &mut pos, &mut gns] {
        if verdict.worst_margin == f64::INFINITY {
            verdict.worst_margin = f64::MAX;
        }
    }

    let thresholds = analytic_thresholds(params.p, params.r);
    let agree = |t: Option<f64>, v: &PropertyVerdict| t.map(|t| (params.delta <= t + 1e-12) == v.holds);
    let agreement = AnalyticAgreement {
        cp: agree(thresholds.delta_cp, &cp),
        tensor_p: agree(thresholds.delta_tensor_p, &tensor),
        p: agree(thresholds.delta_p, &pos),
    };

    let mut revivals = Vec::new();
    for k in 1..=3 {
        let (r1, r2) = axis_states(k);
        revivals.extend(trace_distance_trajectory(env, &r1, &r2, opts.horizon, opts.tol)?.revivals);
    }
    revivals.sort_by_key(|r| (r.from_step, r.to_step));
    revivals.dedup_by_key(|r| (r.from_step, r.to_step));

    if !non_invertible_steps.is_empty() {
        notes.push(format!(
            "propagator does not exist at {} step(s) starting at step {}; divisibility fails there, see the revival list",
            non_invertible_steps.len(),
            non_invertible_steps[0]
        ));
    }
    if !kernel_steps.is_empty() {
        notes.push("collapsed Bloch axes handled by the kernel convention (mu = 0 on the common kernel)".into());
    }

    let convergence = match regular.as_slice() {
        [.., a, b] => (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max),
        _ => f64::NAN,
    };

    Ok(DivisibilityReport {
        params,
        horizon: opts.horizon,
        cp_divisible: cp,
        tensor_p_divisible: tensor,
        p_divisible: pos,
        gns_p_divisible: gns,
        thresholds,
        agreement,
        choi_cross_check,
        kernel_steps,
        non_invertible_steps,
        revivals,
        convergence,
        notes,
    })
}

/// Trace-norm differences `(‖Λ₃[X]‖₁ − ‖Λ₂[X]‖₁, ‖Λ₂[X]‖₁ − ‖Λ₁[X]‖₁)` at the
/// extreme point `p = Δ = ½`, `r = 0`, for `X = x₀𝟙 + x⃗·σ⃗`.
///
/// Requires every `xₖ ≠ 0` and `|x₀| ≤ |x₃|`; then the pair equals
/// `(−2(‖x⃗‖ − |x₃|), +2(‖x⃗‖ − |x₃|))`.
pub fn extreme_dynamics_check(x0: f64, x: [f64; 3]) -> Result<(f64, f64)> {
    if x.iter().any(|v| !v.is_finite()) || !x0.is_finite() {
        return Err(Error::InvalidParameter("non-finite operator coefficients".into()));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidParameter("x must be a nonzero vector".into()));
    }
    if let Some(k) = x.iter().position(|&v| v == 0.0) {
        return Err(Error::InvalidParameter(format!("x{} must be nonzero", k + 1)));
    }
    if x0.abs() > x[2].abs() {
        return Err(Error::InvalidParameter(format!("|x0| <= |x3| violated (x0={x0}, x3={})", x[2])));
    }
    let env = crate::env_chain::build_env(0.5, 0.0, 0.5)?;
    let traj = reduced_dynamics_trajectory(&env, 3);
    let op = from_bloch_coefficients([
        Complex64::new(x0, 0.0),
        Complex64::new(x[0], 0.0),
        Complex64::new(x[1], 0.0),
        Complex64::new(x[2], 0.0),
    ]);
    let norms: Vec<f64> = traj.iter().map(|l| trace_norm(&l.apply(&op))).collect();
    Ok((norms[3] - norms[2], norms[2] - norms[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_chain::build_env;
    use crate::qmat::random_density_matrix;

    fn opts() -> ClassifyOptions {
        ClassifyOptions { restarts: 8, ..Default::default() }
    }

    #[test]
    fn semigroup_propagators_are_the_one_step_map() {
        let env = build_env(0.3, 0.1, 0.0).unwrap();
        let l1 = reduced_dynamics_trajectory(&env, 1)[1].bloch();
        for m in 1..10 {
            let mu = propagator(&env, m, m + 1).unwrap().map().unwrap().bloch();
            assert!(mu.iter().zip(l1).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn extreme_point_propagators() {
        let env = build_env(0.5, 0.0, 0.5).unwrap();
        for m in [1, 3, 5] {
            assert_eq!(propagator(&env, m, m + 1).unwrap(), Propagator::NonInvertible { zeros: [true, true, false] });
            // odd to odd: the collapsed axes stay collapsed
            match propagator(&env, m, m + 2).unwrap() {
                Propagator::KernelPreserving { map, kernel } => {
                    assert_eq!(kernel, [true, true, false]);
                    assert_eq!(map.bloch(), [0.0, 0.0, 1.0]);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(propagator(&env, 2, 3).unwrap().map().unwrap().bloch(), [0.0, 0.0, -1.0]);
        assert!(propagator(&env, 3, 3).is_err());
    }

    #[test]
    fn cocycle_identity() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let p = rng.random_range(0.05..0.45);
            let r = rng.random_range(0.0..(1.0 - 2.0 * p) * 0.9);
            let delta = rng.random_range(0.0..p);
            let env = build_env(p, r, delta).unwrap();
            let m = rng.random_range(0..5);
            let n = m + rng.random_range(1..5);
            let q = n + rng.random_range(1..5);
            let (a, b, c) =
                (propagator(&env, m, n).unwrap(), propagator(&env, n, q).unwrap(), propagator(&env, m, q).unwrap());
            if let (Propagator::Regular { map: a }, Propagator::Regular { map: b }, Propagator::Regular { map: c }) =
                (a, b, c)
            {
                let ab = b.compose(&a).bloch();
                for k in 0..3 {
                    assert!((ab[k] - c.bloch()[k]).abs() <= 1e-9 * (1.0 + c.bloch()[k].abs()));
                }
            }
        }
    }

    #[test]
    fn jacobi_matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let h = crate::qmat::random_hermitian(4, &mut rng);
            let (value, vector) = lowest_eigenpair4(std::array::from_fn(|i| std::array::from_fn(|j| h[(i, j)])));
            let dense = hermitian_eig(&h).unwrap();
            assert!((value - dense.values[3]).abs() < 1e-12);
            let hv: Vec<Complex64> = (0..4).map(|i| (0..4).map(|j| h[(i, j)] * vector[j]).sum()).collect();
            assert!(hv.iter().zip(&vector).all(|(a, b)| (a - b * value).norm() < 1e-11));
        }
        let diag = ComplexMatrix::from_real_diagonal(&[0.3, -0.2, 0.1, 0.0]);
        assert_eq!(lowest_eigenpair4(std::array::from_fn(|i| std::array::from_fn(|j| diag[(i, j)]))).0, -0.2);
    }

    #[test]
    fn pauli_product_action_matches_pauli_expansion() {
        use crate::qmat::kron;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let map = PauliProductMap::new(PauliMap::from_bloch([0.3, -0.7, 0.5]), PauliMap::from_bloch([0.9, 0.2, -0.4]));
        let l = [1.0, 0.3, -0.7, 0.5];
        let r = [1.0, 0.9, 0.2, -0.4];
        for _ in 0..10 {
            let x = crate::qmat::random_hermitian(4, &mut rng);
            let mut expect = ComplexMatrix::zeros(4);
            for a in 0..4 {
                for b in 0..4 {
                    let basis = kron(&sigma(a), &sigma(b));
                    let c = (&basis * &x).trace() * 0.25 * (l[a] * r[b]);
                    expect = &expect + &basis.scale(c);
                }
            }
            assert!(map.apply(&x).max_abs_diff(&expect) < 1e-14);
        }
    }

    #[test]
    fn block_positivity_examples() {
        let id = PauliProductMap::new(PauliMap::IDENTITY, PauliMap::IDENTITY);
        let out = block_positivity_min(&id, 16, 1).unwrap();
        assert!(out.min.abs() < 1e-9);

        let transpose = PauliMap::from_bloch([1.0, -1.0, 1.0]);
        let pt = PauliProductMap::new(transpose, PauliMap::IDENTITY);
        let bell = &bell_states()[0];
        let img = pt.apply(&bell.projector());
        let lowest = crate::qmat::hermitian_eigenvalues(&img).unwrap();
        assert!((lowest[3] + 0.5).abs() < 1e-12);
        assert!((block_positivity_min(&pt, 16, 1).unwrap().min + 0.5).abs() < 1e-9);

        let cp = PauliMap::from_weights([0.5, 0.2, 0.2, 0.1]).unwrap();
        assert!(block_positivity_min(&PauliProductMap::new(cp, PauliMap::IDENTITY), 16, 2).unwrap().min >= -1e-9);
    }

    #[test]
    fn block_positivity_through_closures() {
        let id = FnMap { dims: (2, 2), forward: |x: &ComplexMatrix| x.clone(), adjoint: |x: &ComplexMatrix| x.clone() };
        assert!(block_positivity_min(&id, 4, 3).unwrap().min.abs() < 1e-9);
        // partial transpose on the first qubit
        let pt = |x: &ComplexMatrix| ComplexMatrix::from_fn(4, |i, j| x[(2 * (j / 2) + i % 2, 2 * (i / 2) + j % 2)]);
        let t = FnMap { dims: (2, 2), forward: pt, adjoint: pt };
        assert!((block_positivity_min(&t, 4, 3).unwrap().min + 0.5).abs() < 1e-9);
    }

    #[test]
    fn tensor_square_positivity_threshold() {
        // at μ₃ = 0 the square V ⊗ V of V = (μ, μ, 0) is positive up to μ = 1/√2
        let at = |mu: f64| {
            let v = PauliMap::from_bloch([mu, mu, 0.0]);
            block_positivity_min(&PauliProductMap::new(v, v), 16, 5).unwrap().min
        };
        assert!(at(0.70) >= -1e-9);
        assert!(at(0.72) < -1e-4);
    }

    #[test]
    fn block_positivity_is_reproducible() {
        let v = PauliMap::from_bloch([0.6, 0.6, 0.2]);
        let map = PauliProductMap::new(v, v);
        let a = block_positivity_min(&map, 8, 42).unwrap();
        let b = block_positivity_min(&map, 8, 42).unwrap();
        assert_eq!(a.min.to_bits(), b.min.to_bits());
    }

    #[test]
    fn analytic_threshold_examples() {
        let t = analytic_thresholds(0.25, 0.1);
        assert!((t.a - 0.3).abs() < 1e-15);
        assert!((t.delta_cp.unwrap() - 0.06).abs() < 1e-15);
        assert!((t.delta_p.unwrap() - 0.21).abs() < 1e-15);
        assert!((t.delta_tensor_p.unwrap() / 0.25 - 0.488_58).abs() < 1e-4);
        let none = analytic_thresholds(0.3, 0.3);
        assert!(none.delta_cp.is_none() && none.delta_p.is_none());
    }

    #[test]
    fn uncorrelated_environment_is_cp_divisible() {
        let env = build_env(0.25, 0.1, 0.0).unwrap();
        let rep = classify(&env, &opts()).unwrap();
        for v in [rep.cp_divisible, rep.tensor_p_divisible, rep.p_divisible, rep.gns_p_divisible] {
            assert!(v.holds && v.first_failure_step.is_none());
        }
        assert!(rep.choi_cross_check);
        assert!(rep.revivals.is_empty());
        assert_eq!(rep.agreement, AnalyticAgreement { cp: Some(true), tensor_p: Some(true), p: Some(true) });
    }

    #[test]
    fn fully_correlated_environment_is_not_p_divisible() {
        let env = build_env(0.25, 0.1, 0.25).unwrap();
        let rep = classify(&env, &opts()).unwrap();
        assert!(!rep.p_divisible.holds && !rep.cp_divisible.holds && !rep.tensor_p_divisible.holds);
        assert_eq!(rep.p_divisible.first_failure_step, Some(2));
        assert!(!rep.revivals.is_empty());
        assert!(!rep.gns_p_divisible.holds);
    }

    #[test]
    fn intermediate_region_superactivates() {
        // between the tensor and the single-copy thresholds
        let env = build_env(0.25, 0.1, 0.25 * 0.6).unwrap();
        let rep = classify(&env, &opts()).unwrap();
        assert!(rep.p_divisible.holds && !rep.tensor_p_divisible.holds && !rep.cp_divisible.holds);
        let env = build_env(0.25, 0.1, 0.25 * 0.4).unwrap();
        let rep = classify(&env, &opts()).unwrap();
        assert!(rep.p_divisible.holds && rep.tensor_p_divisible.holds && !rep.cp_divisible.holds);
        assert!(!rep.gns_p_divisible.holds);
    }

    #[test]
    fn extreme_point_falls_back_to_revivals() {
        let env = build_env(0.5, 0.0, 0.5).unwrap();
        let rep = classify(&env, &ClassifyOptions { horizon: 10, ..opts() }).unwrap();
        assert!(!rep.p_divisible.holds);
        assert_eq!(rep.non_invertible_steps, vec![2, 4, 6, 8, 10]);
        assert!(!rep.notes.is_empty());
        let to_steps: Vec<usize> = rep.revivals.iter().map(|r| r.to_step).collect();
        assert_eq!(to_steps, vec![2, 4, 6, 8, 10]);
    }

    #[test]
    fn revival_trajectory_at_the_extreme_point() {
        let env = build_env(0.5, 0.0, 0.5).unwrap();
        let h = 0.5 / 2f64.sqrt();
        let x = (&sigma(1) + &sigma(3)).scale_real(h);
        let rho1 = &ComplexMatrix::identity(2).scale_real(0.5) + &x;
        let rho2 = &ComplexMatrix::identity(2).scale_real(0.5) - &x;
        let traj = trace_distance_trajectory(&env, &rho1, &rho2, 8, 1e-12).unwrap();
        let to: Vec<usize> = traj.revivals.iter().map(|r| r.to_step).collect();
        assert_eq!(to, vec![2, 4, 6, 8]);
        for w in traj.values[1..].windows(2) {
            let d = w[1] - w[0];
            let norm_x = 1.0;
            let x3 = 1.0 / 2f64.sqrt();
            assert!((d.abs() - (norm_x - x3)).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_trace_distance_is_monotone() {
        let env = build_env(0.25, 0.1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let (a, b) = (random_density_matrix(2, &mut rng), random_density_matrix(2, &mut rng));
            assert!(trace_distance_trajectory(&env, &a, &b, 30, 1e-12).unwrap().revivals.is_empty());
        }
    }

    #[test]
    fn p_divisible_dynamics_never_revives() {
        let env = build_env(0.25, 0.1, 0.25 * 0.8).unwrap();
        assert!(
            classify(&env, &ClassifyOptions { horizon: 40, restarts: 4, ..Default::default() })
                .unwrap()
                .p_divisible
                .holds
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let (a, b) = (random_density_matrix(2, &mut rng), random_density_matrix(2, &mut rng));
            assert!(trace_distance_trajectory(&env, &a, &b, 40, 1e-12).unwrap().revivals.is_empty());
        }
    }

    #[test]
    fn extreme_dynamics_examples() {
        let (odd, even) = extreme_dynamics_check(0.0, [1.0, 1.0, 1.0]).unwrap();
        let expect = 2.0 * (3f64.sqrt() - 1.0);
        assert!((odd + expect).abs() < 1e-12 && (even - expect).abs() < 1e-12);
        assert!(extreme_dynamics_check(0.0, [1.0, 0.0, 1.0]).is_err());
        assert!(extreme_dynamics_check(0.0, [0.0, 0.0, 0.0]).is_err());
        assert!(extreme_dynamics_check(0.9, [1.0, 1.0, 0.5]).is_err());
        let eps = 1e-7;
        let (odd, even) = extreme_dynamics_check(0.3, [eps, eps, 1.0]).unwrap();
        assert!(odd.abs() < 1e-6 && even.abs() < 1e-6);
    }

    #[test]
    fn extreme_dynamics_matches_formula_for_admissible_inputs() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let x: [f64; 3] =
                std::array::from_fn(|_| rng.random_range(0.1..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
            let x0 = rng.random_range(-1.0..1.0) * x[2].abs();
            let (odd, even) = extreme_dynamics_check(x0, x).unwrap();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let expect = 2.0 * (norm - x[2].abs());
            assert!((odd + expect).abs() < 1e-12 && (even - expect).abs() < 1e-12);
        }
    }
}
