//! `verify`: a registry of named cross-checks between independent
//! computations, each reporting pass/fail, the measured figure of merit and
//! its wall time.

use std::sync::OnceLock;
use std::time::Instant;

use alfent_core::alf::{
    alf_closed_form, entropy_sequence, povm_search, qr_lower_bound, rate_estimate, reference_entropy_sequence,
    RateMethod,
};
use alfent_core::collision::{
    cgdm_bruteforce, cgdm_closed_form, random_povm, reduced_dynamics, reduced_dynamics_bruteforce,
    reduced_dynamics_with, reference_povm, tn_channel, CollisionModel, Interaction,
};
use alfent_core::divisibility::{analytic_thresholds, extreme_dynamics_check, DivisibilityReport};
use alfent_core::env_chain::{build_env, shannon_entropy};
use alfent_core::pauli::{from_bloch_coefficients, PauliMap, PauliSignTable};
use alfent_core::qmat::{hermitian_eigenvalues, trace_norm};
use alfent_core::{Complex64, ComplexMatrix, LogBase};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DeltaGrid, ScanConfig};
use crate::error::{CliError, CliResult};
use crate::scan;

pub const SCHEMA: &str = "alfent-verify/v1";

const LN2: f64 = std::f64::consts::LN_2;
const TOL: f64 = 1e-9;
const P: f64 = 0.25;
const R: f64 = 0.1;
const SCAN_STEPS: usize = 200;

/// Shared state for one verification run.
pub struct VerifyContext {
    pub seed: u64,
    pub jobs: usize,
    pub signs: PauliSignTable,
    scan: OnceLock<Result<Vec<DivisibilityReport>, String>>,
}

impl VerifyContext {
    pub fn new(seed: u64, jobs: usize) -> Self {
        Self { seed, jobs, signs: PauliSignTable::standard(), scan: OnceLock::new() }
    }

    /// Flips one sign of the Pauli table; the spectral checks must then fail.
    pub fn with_sign_error(mut self) -> Self {
        let mut raw = [[-1i8; 4]; 3];
        for (k, row) in raw.iter_mut().enumerate() {
            row[0] = 1;
            row[k + 1] = 1;
        }
        raw[0][3] = 1;
        self.signs = PauliSignTable::from_raw(raw);
        self
    }

    fn model(&self, p: f64, r: f64, delta: f64) -> CliResult<CollisionModel> {
        Ok(CollisionModel::new(build_env(p, r, delta)?).with_sign_table(self.signs))
    }

    fn scan(&self) -> CliResult<(&[f64], &[DivisibilityReport])> {
        static RATIOS: OnceLock<Vec<f64>> = OnceLock::new();
        let grid = DeltaGrid { min: 0.0, max: 1.0, steps: SCAN_STEPS };
        let ratios = RATIOS.get_or_init(|| grid.ratios());
        let reports = self.scan.get_or_init(|| {
            let config = ScanConfig {
                p: P,
                r: R,
                delta_grid: grid,
                horizon: 50,
                seed: self.seed,
                jobs: self.jobs,
                ..Default::default()
            };
            scan::reports(&config).map_err(|e| e.to_string())
        });
        match reports {
            Ok(r) => Ok((ratios, r)),
            Err(e) => Err(CliError::Numerical(e.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    /// Figure of merit (usually the largest deviation found).
    pub value: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn within(value: f64, tol: f64, detail: String) -> Self {
        Self { passed: value <= tol, value, detail }
    }
}

pub struct Check {
    pub name: &'static str,
    pub about: &'static str,
    /// The outcome does not depend on the seed.
    pub deterministic: bool,
    pub run: fn(&VerifyContext) -> CliResult<CheckOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub deterministic: bool,
    pub value: f64,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub schema: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub seconds: f64,
    pub checks: Vec<CheckRecord>,
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "sign_table", about: "Pauli sign table matches σₖσᵢσₖ = ±σᵢ", deterministic: true, run: sign_table
    },
    Check {
        name: "closed_form_spectrum",
        about: "closed-form CGDM spectrum equals the brute-force one (n ≤ 3)",
        deterministic: true,
        run: closed_form_spectrum,
    },
    Check {
        name: "entropy_identity",
        about: "S(CGDM) = 2 log 2 + H(π_[1,n]) and difference rate = chain rate",
        deterministic: true,
        run: entropy_identity,
    },
    Check {
        name: "rate_consistency",
        about: "closed form = chain rate = H(π₁) − I on 100 points",
        deterministic: true,
        run: rate_consistency,
    },
    Check {
        name: "zero_entropy_point",
        about: "rate 0 and constant entropies at p = Δ = 1/2",
        deterministic: true,
        run: zero_entropy_point,
    },
    Check {
        name: "reduced_dynamics",
        about: "transfer recursion for Λₙ equals explicit unitary averaging",
        deterministic: true,
        run: reduced_dynamics_agreement,
    },
    Check {
        name: "chain_identities",
        about: "block entropies and mutual information from enumeration",
        deterministic: true,
        run: chain_identities,
    },
    Check {
        name: "choi_cp_agreement",
        about: "CP from Pauli weights agrees with the Choi spectrum",
        deterministic: true,
        run: choi_cp_agreement,
    },
    Check {
        name: "divisibility_thresholds",
        about: "200-point scan puts region boundaries within one step of the analytic values",
        deterministic: false,
        run: divisibility_thresholds,
    },
    Check {
        name: "gns_equivalence",
        about: "CP-divisible iff the GNS dilation is P-divisible on the scan grid",
        deterministic: false,
        run: gns_equivalence,
    },
    Check {
        name: "revival_formulas",
        about: "trace-norm steps ∓2(√3 − 1) at p = Δ = 1/2",
        deterministic: true,
        run: revival_formulas,
    },
    Check {
        name: "closed_system_bound",
        about: "identity interaction keeps S ≤ 2 log 2 for random POVMs",
        deterministic: false,
        run: closed_system_bound,
    },
    Check {
        name: "supremum_sandwich",
        about: "random POVMs stay below the chain bound; the reference POVM attains it",
        deterministic: false,
        run: supremum_sandwich,
    },
    Check {
        name: "qr_factorization",
        about: "product weights and QR bound = rate at Δ = 0",
        deterministic: true,
        run: qr_factorization,
    },
];

pub fn find(name: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.name == name)
}

/// Runs the selected checks (all when `names` is empty) in registry order.
pub fn run(ctx: &VerifyContext, names: &[String]) -> CliResult<VerifySummary> {
    for name in names {
        if find(name).is_none() {
            return Err(CliError::usage("check", format!("unknown check '{name}'")));
        }
    }
    let start = Instant::now();
    let mut checks = Vec::new();
    for check in CHECKS.iter().filter(|c| names.is_empty() || names.iter().any(|n| n == c.name)) {
        let t = Instant::now();
        let outcome = (check.run)(ctx).unwrap_or_else(|e| CheckOutcome {
            passed: false,
            value: f64::NAN,
            detail: format!("error: {e}"),
        });
        checks.push(CheckRecord {
            name: check.name.into(),
            passed: outcome.passed,
            deterministic: check.deterministic,
            value: outcome.value,
            seconds: t.elapsed().as_secs_f64(),
            detail: outcome.detail,
        });
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    Ok(VerifySummary {
        schema: SCHEMA.into(),
        seed: ctx.seed,
        passed,
        failed: checks.len() - passed,
        seconds: start.elapsed().as_secs_f64(),
        checks,
    })
}

fn half() -> ComplexMatrix {
    ComplexMatrix::identity(2).scale_real(0.5)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sign_table(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    Ok(match ctx.signs.validate() {
        Ok(()) => CheckOutcome { passed: true, value: 0.0, detail: "all 12 signs match".into() },
        Err(e) => CheckOutcome { passed: false, value: 1.0, detail: e.to_string() },
    })
}

fn closed_form_spectrum(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let f = reference_povm(&half())?;
    let mut worst = 0.0f64;
    for delta in [0.0, 0.1, 0.25] {
        let model = ctx.model(P, R, delta)?;
        for n in 0..=3 {
            let brute = hermitian_eigenvalues(&cgdm_bruteforce(&model, &f, n)?.matrix())?;
            worst = worst.max(max_diff(&brute, &cgdm_closed_form(&model, n)?.spectrum()));
        }
    }
    Ok(CheckOutcome::within(worst, TOL, format!("max eigenvalue gap {worst:.2e}")))
}

fn entropy_identity(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let f = reference_povm(&half())?;
    let mut worst = 0.0f64;
    for delta in [0.0, 0.1, 0.25] {
        let model = ctx.model(P, R, delta)?;
        let env = model.env();
        for n in 0..=5 {
            let s = cgdm_bruteforce(&model, &f, n)?.entropy(LogBase::E)?;
            let h = shannon_entropy(&env.block_distribution(n)?);
            worst = worst.max((s - 2.0 * LN2 - h).abs());
        }
        let rate = rate_estimate(&entropy_sequence(&model, &f, 6, "reference")?, RateMethod::Difference)?;
        worst = worst.max((rate - env.entropy_rate()).abs());
    }
    Ok(CheckOutcome::within(worst, TOL, format!("max deviation {worst:.2e} over n ≤ 5")))
}

fn admissible_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(100);
    for p in [0.0, 0.1, 0.25, 0.4, 0.5] {
        for f in [0.0, 0.2, 0.5, 1.0] {
            for k in 0..5 {
                out.push((p, (1.0 - 2.0 * p) * f, p * k as f64 / 4.0));
            }
        }
    }
    out
}

fn rate_consistency(_: &VerifyContext) -> CliResult<CheckOutcome> {
    let mut rate_gap = 0.0f64;
    let mut mi_gap = 0.0f64;
    for (p, r, d) in admissible_grid() {
        let env = build_env(p, r, d)?;
        let closed = alf_closed_form(p, r, d)?;
        rate_gap = rate_gap.max((closed - env.entropy_rate()).abs());
        mi_gap = mi_gap.max((closed - env.one_site_entropy() + env.mutual_information()).abs());
    }
    Ok(CheckOutcome {
        passed: rate_gap <= 1e-12 && mi_gap <= 1e-10,
        value: rate_gap.max(mi_gap),
        detail: format!("rate gap {rate_gap:.2e}, H − I gap {mi_gap:.2e}"),
    })
}

fn zero_entropy_point(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let alf = alf_closed_form(0.5, 0.0, 0.5)?;
    let model = ctx.model(0.5, 0.0, 0.5)?;
    let brute = entropy_sequence(&model, &reference_povm(&half())?, 6, "reference")?;
    let closed = reference_entropy_sequence(&model, 40)?;
    let spread = |v: &[f64]| v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
    let worst = alf.abs().max(spread(&brute.values[1..])).max(spread(&closed.values[1..]));
    Ok(CheckOutcome::within(worst, 1e-12, format!("rate {alf:.2e}, entropy spread for k ≥ 2 at most {worst:.2e}")))
}

fn reduced_dynamics_agreement(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let mut worst = 0.0f64;
    for delta in [0.0, 0.1, 0.25] {
        let env = build_env(P, R, delta)?;
        for n in 0..=6 {
            let fast = reduced_dynamics_with(&env, &ctx.signs, n).bloch();
            worst = worst.max(max_diff(&fast, &reduced_dynamics_bruteforce(&env, n)?.bloch()));
        }
    }
    Ok(CheckOutcome::within(worst, 1e-12, format!("max Bloch eigenvalue gap {worst:.2e} over n ≤ 6")))
}

fn chain_identities(_: &VerifyContext) -> CliResult<CheckOutcome> {
    let mut worst = 0.0f64;
    for (p, r, d) in admissible_grid().into_iter().step_by(7) {
        let env = build_env(p, r, d)?;
        for n in 1..=8 {
            worst = worst.max((env.block_entropy(n) - env.block_entropy_enumerated(n)?).abs());
        }
        worst = worst.max((env.mutual_information() - env.mutual_information_from_blocks()).abs());
    }
    Ok(CheckOutcome::within(worst, 1e-10, format!("max deviation {worst:.2e}")))
}

fn choi_cp_agreement(_: &VerifyContext) -> CliResult<CheckOutcome> {
    let axis: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
    let mut disagreements = 0;
    let mut total = 0;
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                let map = PauliMap::from_bloch([a, b, c]);
                let choi_min = hermitian_eigenvalues(&map.choi())?.into_iter().fold(f64::INFINITY, f64::min);
                let by_weights = map.weights().iter().all(|&w| w >= -1e-12);
                if by_weights != (choi_min >= -1e-12) {
                    disagreements += 1;
                }
                total += 1;
            }
        }
    }
    Ok(CheckOutcome {
        passed: disagreements == 0,
        value: disagreements as f64,
        detail: format!("{disagreements} disagreements over {total} maps"),
    })
}

/// Midpoint of the single true→false switch in `holds`.
fn boundary(ratios: &[f64], holds: impl Iterator<Item = bool>) -> Option<f64> {
    let holds: Vec<bool> = holds.collect();
    let switch = holds.iter().position(|&h| !h)?;
    if switch == 0 || holds[switch..].iter().any(|&h| h) {
        return None;
    }
    Some(0.5 * (ratios[switch - 1] + ratios[switch]))
}

fn divisibility_thresholds(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let (ratios, reports) = ctx.scan()?;
    let step = 1.0 / (SCAN_STEPS - 1) as f64;
    let t = analytic_thresholds(P, R);
    let found = [
        ("CP", t.delta_cp, boundary(ratios, reports.iter().map(|r| r.cp_divisible.holds))),
        ("P⊗P", t.delta_tensor_p, boundary(ratios, reports.iter().map(|r| r.tensor_p_divisible.holds))),
        ("P", t.delta_p, boundary(ratios, reports.iter().map(|r| r.p_divisible.holds))),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, analytic, numeric) in found {
        let analytic = analytic.map(|d| d / P).unwrap_or(f64::NAN);
        let gap = numeric.map_or(f64::INFINITY, |b| (b - analytic).abs());
        worst = worst.max(if gap.is_nan() { f64::INFINITY } else { gap });
        parts.push(format!("{name} {} vs {analytic:.4}", numeric.map_or("none".into(), |b| format!("{b:.4}"))));
    }
    Ok(CheckOutcome::within(worst, step, format!("{}; step {step:.4}", parts.join(", "))))
}

fn gns_equivalence(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let (_, reports) = ctx.scan()?;
    let mismatches = reports.iter().filter(|r| r.cp_divisible.holds != r.gns_p_divisible.holds).count();
    Ok(CheckOutcome {
        passed: mismatches == 0,
        value: mismatches as f64,
        detail: format!("{mismatches} mismatches over {} points", reports.len()),
    })
}

fn revival_formulas(_: &VerifyContext) -> CliResult<CheckOutcome> {
    let amp = 2.0 * (3f64.sqrt() - 1.0);
    let (odd, even) = extreme_dynamics_check(0.0, [1.0, 1.0, 1.0])?;
    let mut worst = (odd + amp).abs().max((even - amp).abs());
    let env = build_env(0.5, 0.0, 0.5)?;
    let c = |v: f64| Complex64::new(v, 0.0);
    let x = from_bloch_coefficients([c(0.0), c(1.0), c(1.0), c(1.0)]);
    let norms: Vec<f64> = (0..=20).map(|n| trace_norm(&reduced_dynamics(&env, n).apply(&x))).collect();
    for n in 1..20 {
        let target = if (n + 1) % 2 == 0 { amp } else { -amp };
        worst = worst.max((norms[n + 1] - norms[n] - target).abs());
    }
    Ok(CheckOutcome::within(worst, 1e-12, format!("odd {odd:.15}, even {even:.15}, max deviation {worst:.2e}")))
}

fn closed_system_bound(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let model = ctx.model(P, R, 0.1)?.with_interaction(Interaction::Identity);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let seq = entropy_sequence(&model, &random_povm(4, &mut rng), 6, "random")?;
        worst = seq.values.iter().copied().fold(worst, f64::max);
    }
    let excess = worst - 2.0 * LN2;
    Ok(CheckOutcome::within(excess, TOL, format!("max S = {worst:.12} against 2 log 2 = {:.12}", 2.0 * LN2)))
}

fn supremum_sandwich(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let search = povm_search(&ctx.model(P, R, 0.1)?, 3, 101, ctx.seed, 4)?;
    let gap = (search.trials[0].rate - search.entropy_rate).abs();
    let violations = search.entropy_bound_violations + search.rate_bound_violations;
    Ok(CheckOutcome {
        passed: violations == 0 && gap <= TOL,
        value: gap,
        detail: format!("{violations} bound violations over 100 POVMs, reference gap {gap:.2e}"),
    })
}

fn qr_factorization(ctx: &VerifyContext) -> CliResult<CheckOutcome> {
    let env = build_env(P, R, 0.0)?;
    let one: [f64; 4] = tn_channel(&env, 1)?.weights().try_into().expect("four one-step weights");
    let mut defect = 0.0f64;
    for n in 1..=5 {
        defect = defect.max(tn_channel(&env, n)?.factorization_defect(one));
    }
    let model = ctx.model(P, R, 0.0)?;
    let rate =
        rate_estimate(&entropy_sequence(&model, &reference_povm(&half())?, 6, "reference")?, RateMethod::Difference)?;
    let gap = (qr_lower_bound(&env)? - rate).abs();
    Ok(CheckOutcome {
        passed: defect == 0.0 && gap <= TOL,
        value: gap,
        detail: format!("factorization defect {defect:e}, QR gap {gap:.2e}"),
    })
}
