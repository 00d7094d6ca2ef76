//! `entropy`: four estimates of the dynamical entropy rate per grid point.

use alfent_core::alf::{alf_closed_form, entropy_sequence, qr_lower_bound, rate_estimate, RateMethod};
use alfent_core::collision::{reference_povm, CollisionModel};
use alfent_core::env_chain::build_env;
use alfent_core::{ComplexMatrix, LogBase};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScanConfig, MAX_N};
use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "alfent-entropy/v1";

/// All rates in the configured log base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub delta_ratio: f64,
    pub delta: f64,
    /// Closed-form ALF entropy.
    pub alf_entropy: f64,
    /// Difference estimator on the brute-force entropies of the reference POVM.
    pub finite_rate: f64,
    /// Conditional entropy rate of the environment chain.
    pub chain_rate: f64,
    /// Entropy of the one-step Choi state; equals the rate only at Δ = 0.
    pub qr_bound: f64,
    pub finite_minus_alf: f64,
    pub chain_minus_alf: f64,
    pub alf_minus_qr: f64,
    pub max_pairwise_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyDataset {
    pub schema: String,
    pub config: ScanConfig,
    pub rows: Vec<EntropyRow>,
}

pub fn entropy_row(config: &ScanConfig, delta_ratio: f64, delta: f64) -> CliResult<EntropyRow> {
    let env = build_env(config.p, config.r, delta)?;
    let half = ComplexMatrix::identity(2).scale_real(0.5);
    let model = CollisionModel::new(env.clone());
    let povm = reference_povm(&half)?;
    let seq = entropy_sequence(&model, &povm, config.n_max + 1, "reference")?;
    let base = config.log_base;
    let alf = base.from_nats(alf_closed_form(config.p, config.r, delta)?);
    let finite = base.from_nats(rate_estimate(&seq, RateMethod::Difference)?);
    let chain = base.from_nats(env.entropy_rate());
    let qr = base.from_nats(qr_lower_bound(&env)?);
    let values = [alf, finite, chain, qr];
    let max_gap = values.iter().flat_map(|a| values.iter().map(move |b| (a - b).abs())).fold(0.0, f64::max);
    Ok(EntropyRow {
        delta_ratio,
        delta,
        alf_entropy: alf,
        finite_rate: finite,
        chain_rate: chain,
        qr_bound: qr,
        finite_minus_alf: finite - alf,
        chain_minus_alf: chain - alf,
        alf_minus_qr: alf - qr,
        max_pairwise_gap: max_gap,
    })
}

pub fn compute(config: &ScanConfig) -> CliResult<EntropyDataset> {
    if !(2..=MAX_N).contains(&config.n_max) {
        return Err(CliError::usage(
            "n_max",
            format!("{} is outside 2..={MAX_N} (the finite-n rate needs at least three slots)", config.n_max),
        ));
    }
    let points: Vec<(f64, f64)> = config.delta_grid.ratios().into_iter().zip(config.deltas()).collect();
    let rows = config
        .thread_pool()?
        .install(|| points.par_iter().map(|&(x, d)| entropy_row(config, x, d)).collect::<CliResult<Vec<_>>>())?;
    Ok(EntropyDataset { schema: SCHEMA.into(), config: config.clone(), rows })
}

/// Identities the four columns must satisfy, as messages for each breach.
pub fn invariant_violations(data: &EntropyDataset) -> Vec<String> {
    let tol = data.config.tolerances.invariant / nats_per_unit(data.config.log_base);
    let mut out = Vec::new();
    for row in &data.rows {
        let x = row.delta_ratio;
        if row.finite_minus_alf.abs() > tol {
            out.push(format!("Δ/p = {x}: finite-n rate differs from the closed form by {:.3e}", row.finite_minus_alf));
        }
        if row.chain_minus_alf.abs() > tol {
            out.push(format!("Δ/p = {x}: chain rate differs from the closed form by {:.3e}", row.chain_minus_alf));
        }
    }
    out
}

fn nats_per_unit(base: LogBase) -> f64 {
    match base {
        LogBase::E => 1.0,
        LogBase::Two => std::f64::consts::LN_2,
    }
}

#[cfg(test)]
mod tests {
    use alfent_core::env_chain::shannon_entropy;

    use super::*;
    use crate::config::DeltaGrid;

    #[test]
    fn semigroup_point_has_four_equal_columns() {
        let config = ScanConfig { n_max: 3, ..Default::default() };
        let row = entropy_row(&config, 0.0, 0.0).unwrap();
        // at Δ = 0 the chain is i.i.d. with the stationary law (0.4, 0.25, 0.25, 0.1)
        let h1 = shannon_entropy(&[0.4, 0.25, 0.25, 0.1]);
        for v in [row.alf_entropy, row.finite_rate, row.chain_rate, row.qr_bound] {
            assert!((v - h1).abs() < 1e-9, "{v} vs {h1}");
        }
        assert!(row.max_pairwise_gap < 1e-9);
    }

    #[test]
    fn extreme_point_has_zero_entropy() {
        let config = ScanConfig { p: 0.5, r: 0.0, n_max: 3, ..Default::default() };
        let row = entropy_row(&config, 1.0, 0.5).unwrap();
        assert!(row.alf_entropy.abs() < 1e-12);
        assert!(row.finite_rate.abs() < 1e-9);
    }

    #[test]
    fn bits_rescale_every_column() {
        let nats = entropy_row(&ScanConfig { n_max: 2, ..Default::default() }, 0.5, 0.125).unwrap();
        let bits =
            entropy_row(&ScanConfig { n_max: 2, log_base: LogBase::Two, ..Default::default() }, 0.5, 0.125).unwrap();
        assert!((bits.alf_entropy * std::f64::consts::LN_2 - nats.alf_entropy).abs() < 1e-12);
        assert!((bits.qr_bound * std::f64::consts::LN_2 - nats.qr_bound).abs() < 1e-12);
    }

    #[test]
    fn rows_follow_grid_and_satisfy_identities() {
        let config = ScanConfig {
            n_max: 3,
            delta_grid: DeltaGrid { min: 0.0, max: 1.0, steps: 7 },
            jobs: 2,
            ..Default::default()
        };
        let data = compute(&config).unwrap();
        assert_eq!(data.rows.len(), 7);
        assert_eq!(data.rows[6].delta_ratio, 1.0);
        assert!(invariant_violations(&data).is_empty(), "{:?}", invariant_violations(&data));
    }

    #[test]
    fn out_of_range_n_is_a_usage_error() {
        let config = ScanConfig { n_max: 6, ..Default::default() };
        assert!(matches!(compute(&config), Err(CliError::Usage { field, .. }) if field == "n_max"));
    }
}
