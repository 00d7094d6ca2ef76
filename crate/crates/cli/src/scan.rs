//! `scan`: divisibility region and entropy along the Δ/p grid.

use std::fmt;

use alfent_core::alf::alf_closed_form;
use alfent_core::divisibility::{analytic_thresholds, classify, ClassifyOptions, DivisibilityReport};
use alfent_core::env_chain::build_env;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScanConfig;
use crate::error::CliResult;

pub const SCHEMA: &str = "alfent-scan/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "CP-div")]
    CpDivisible,
    #[serde(rename = "P⊗P-div")]
    TensorPDivisible,
    #[serde(rename = "P-div")]
    PDivisible,
    #[serde(rename = "non-P-div")]
    NotPDivisible,
}

impl Region {
    pub const ALL: [Region; 4] =
        [Region::CpDivisible, Region::TensorPDivisible, Region::PDivisible, Region::NotPDivisible];

    /// Strongest property that holds.
    pub fn of(report: &DivisibilityReport) -> Self {
        if report.cp_divisible.holds {
            Region::CpDivisible
        } else if report.tensor_p_divisible.holds {
            Region::TensorPDivisible
        } else if report.p_divisible.holds {
            Region::PDivisible
        } else {
            Region::NotPDivisible
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::CpDivisible => "CP-div",
            Region::TensorPDivisible => "P⊗P-div",
            Region::PDivisible => "P-div",
            Region::NotPDivisible => "non-P-div",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub delta_ratio: f64,
    pub alf_entropy: f64,
    pub chain_rate: f64,
    pub mutual_info: f64,
    pub region: Region,
    pub cp_div: bool,
    pub tensor_p_div: bool,
    pub p_div: bool,
    pub gns_p_div: bool,
    pub first_failure_step: Option<usize>,
    /// The region differs from the previous row's.
    pub boundary: bool,
}

/// Analytic region boundaries, in units of Δ/p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRatios {
    pub cp: Option<f64>,
    pub tensor_p: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDataset {
    pub schema: String,
    pub config: ScanConfig,
    pub thresholds: ThresholdRatios,
    pub rows: Vec<ScanRow>,
}

pub fn classify_options(config: &ScanConfig) -> ClassifyOptions {
    ClassifyOptions {
        horizon: config.horizon,
        tol: config.tolerances.invariant,
        optimizer_tol: config.tolerances.optimizer,
        seed: config.seed,
        ..Default::default()
    }
}

/// Full reports for every grid point, in grid order.
pub fn reports(config: &ScanConfig) -> CliResult<Vec<DivisibilityReport>> {
    let opts = classify_options(config);
    let deltas = config.deltas();
    let reports = config.thread_pool()?.install(|| {
        deltas
            .par_iter()
            .map(|&d| Ok(classify(&build_env(config.p, config.r, d)?, &opts)?))
            .collect::<CliResult<Vec<_>>>()
    })?;
    Ok(reports)
}

pub fn compute(config: &ScanConfig) -> CliResult<ScanDataset> {
    let reports = reports(config)?;
    let base = config.log_base;
    let mut rows: Vec<ScanRow> = Vec::with_capacity(reports.len());
    for (x, report) in config.delta_grid.ratios().into_iter().zip(&reports) {
        let env = build_env(config.p, config.r, report.params.delta)?;
        let region = Region::of(report);
        let boundary = rows.last().is_some_and(|prev| prev.region != region);
        rows.push(ScanRow {
            delta_ratio: x,
            alf_entropy: base.from_nats(alf_closed_form(config.p, config.r, report.params.delta)?),
            chain_rate: base.from_nats(env.entropy_rate()),
            mutual_info: base.from_nats(env.mutual_information()),
            region,
            cp_div: report.cp_divisible.holds,
            tensor_p_div: report.tensor_p_divisible.holds,
            p_div: report.p_divisible.holds,
            gns_p_div: report.gns_p_divisible.holds,
            first_failure_step: report.first_failure_step(),
            boundary,
        });
    }
    let t = analytic_thresholds(config.p, config.r);
    let ratio = |d: Option<f64>| d.filter(|_| config.p > 0.0).map(|d| d / config.p);
    let thresholds = ThresholdRatios { cp: ratio(t.delta_cp), tensor_p: ratio(t.delta_tensor_p), p: ratio(t.delta_p) };
    Ok(ScanDataset { schema: SCHEMA.into(), config: config.clone(), thresholds, rows })
}

/// Structural properties every scan must have.
pub fn invariant_violations(data: &ScanDataset) -> Vec<String> {
    let tol = data.config.tolerances.invariant;
    let mut out = Vec::new();
    for row in &data.rows {
        let x = row.delta_ratio;
        if (row.cp_div && !row.tensor_p_div) || (row.tensor_p_div && !row.p_div) {
            out.push(format!("Δ/p = {x}: divisibility verdicts are not nested"));
        }
        if row.cp_div != row.gns_p_div {
            out.push(format!("Δ/p = {x}: CP-divisibility and GNS P-divisibility disagree"));
        }
        if (row.alf_entropy - row.chain_rate).abs() > tol {
            out.push(format!(
                "Δ/p = {x}: closed form and chain rate differ by {:.3e}",
                row.alf_entropy - row.chain_rate
            ));
        }
    }
    if data.config.p > 0.0 {
        for w in data.rows.windows(2) {
            if w[1].alf_entropy >= w[0].alf_entropy {
                out.push(format!(
                    "entropy does not decrease between Δ/p = {} and {}",
                    w[0].delta_ratio, w[1].delta_ratio
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DeltaGrid;

    fn small() -> ScanConfig {
        ScanConfig { delta_grid: DeltaGrid { min: 0.0, max: 1.0, steps: 9 }, horizon: 10, ..Default::default() }
    }

    #[test]
    fn coarse_scan_visits_all_regions_in_order() {
        let data = compute(&small()).unwrap();
        let regions: Vec<Region> = data.rows.iter().map(|r| r.region).collect();
        // ratios 0, 1/8, ..., 1 against boundaries 0.24, 0.489, 0.84
        use Region::*;
        assert_eq!(
            regions,
            vec![
                CpDivisible,
                CpDivisible,
                TensorPDivisible,
                TensorPDivisible,
                PDivisible,
                PDivisible,
                PDivisible,
                NotPDivisible,
                NotPDivisible
            ]
        );
        let flagged: Vec<f64> = data.rows.iter().filter(|r| r.boundary).map(|r| r.delta_ratio).collect();
        assert_eq!(flagged, vec![0.25, 0.5, 0.875]);
        assert!(invariant_violations(&data).is_empty(), "{:?}", invariant_violations(&data));
        assert!((data.thresholds.cp.unwrap() - 0.24).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let one = compute(&ScanConfig { jobs: 1, ..small() }).unwrap();
        let three = compute(&ScanConfig { jobs: 3, ..small() }).unwrap();
        assert_eq!(one.rows, three.rows);
    }

    #[test]
    fn first_failure_is_absent_only_in_cp_region() {
        let data = compute(&small()).unwrap();
        for row in &data.rows {
            assert_eq!(row.first_failure_step.is_none(), row.cp_div, "Δ/p = {}", row.delta_ratio);
        }
    }
}
