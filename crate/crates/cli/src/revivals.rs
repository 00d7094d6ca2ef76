//! `revivals`: trace norm of Λₙ[x₀𝟙 + x·σ] step by step.

use alfent_core::collision::reduced_dynamics_trajectory;
use alfent_core::env_chain::build_env;
use alfent_core::pauli::from_bloch_coefficients;
use alfent_core::qmat::trace_norm;
use alfent_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ScanConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "alfent-revivals/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevivalRow {
    pub step: usize,
    pub trace_norm: f64,
    /// `‖Λₙ[X]‖₁ − ‖Λₙ₋₁[X]‖₁`; absent at step 0.
    pub difference: Option<f64>,
    pub revival: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevivalDataset {
    pub schema: String,
    pub p: f64,
    pub r: f64,
    pub delta: f64,
    pub x0: f64,
    pub x: [f64; 3],
    pub rows: Vec<RevivalRow>,
}

pub fn compute(config: &ScanConfig, x0: f64, x: [f64; 3], ratio: f64) -> CliResult<RevivalDataset> {
    if !x0.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::usage("x", "components must be finite"));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(CliError::usage("x", "the Bloch part is zero, so Λₙ[X] is constant"));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(CliError::usage("ratio", format!("Δ/p = {ratio} is outside [0, 1]")));
    }
    let delta = (ratio * config.p).min(config.p);
    let env = build_env(config.p, config.r, delta)?;
    let c = |v: f64| Complex64::new(v, 0.0);
    let op = from_bloch_coefficients([c(x0), c(x[0]), c(x[1]), c(x[2])]);
    let norms: Vec<f64> =
        reduced_dynamics_trajectory(&env, config.n_max).iter().map(|l| trace_norm(&l.apply(&op))).collect();
    let rows = norms
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let difference = (n > 0).then(|| v - norms[n - 1]);
            RevivalRow {
                step: n,
                trace_norm: v,
                difference,
                revival: difference.is_some_and(|d| d > config.tolerances.revival),
            }
        })
        .collect();
    Ok(RevivalDataset { schema: SCHEMA.into(), p: config.p, r: config.r, delta, x0, x, rows })
}
