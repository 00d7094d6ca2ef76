//! Run configuration: a TOML file merged with command-line overrides.
//!
//! Every field has a default, so an empty file (or no file) is valid:
//!
//! ```toml
//! p = 0.25
//! r = 0.1
//! n_max = 5
//! horizon = 50
//! log_base = "e"
//! seed = 0
//! format = "csv"
//!
//! [delta_grid]
//! min = 0.0
//! max = 1.0
//! steps = 200
//!
//! [tolerances]
//! invariant = 1e-9
//! revival = 1e-12
//! optimizer = 1e-9
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use alfent_core::LogBase;
use serde::{Deserialize, Serialize};

use crate::args::{Format, GlobalArgs};
use crate::error::{CliError, CliResult};

/// Largest collision count for the brute-force finite-n rate (CGDM dimension
/// 4^(n+1)).
pub const MAX_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaGrid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl DeltaGrid {
    /// `steps` evenly spaced ratios from `min` to `max` inclusive.
    pub fn ratios(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + (self.max - self.min) * i as f64 / last).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.steps - 1) as f64
    }
}

impl Default for DeltaGrid {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0, steps: 200 }
    }
}

impl FromStr for DeltaGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts.as_slice() else {
            return Err(format!("expected MIN:MAX:STEPS, got '{s}'"));
        };
        let real = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
        Ok(Self {
            min: real(min)?,
            max: real(max)?,
            steps: steps.trim().parse().map_err(|e| format!("'{steps}': {e}"))?,
        })
    }
}

impl fmt::Display for DeltaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed gap for identities between computed quantities.
    pub invariant: f64,
    /// Minimum trace-norm increase counted as a revival.
    pub revival: f64,
    /// Margin below which block-positivity verdicts are marginal.
    pub optimizer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { invariant: 1e-9, revival: 1e-12, optimizer: alfent_core::divisibility::OPTIMIZER_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub p: f64,
    pub r: f64,
    pub delta_grid: DeltaGrid,
    pub n_max: usize,
    pub horizon: usize,
    pub log_base: LogBase,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            p: 0.25,
            r: 0.1,
            delta_grid: DeltaGrid::default(),
            n_max: MAX_N,
            horizon: alfent_core::divisibility::DEFAULT_HORIZON,
            log_base: LogBase::E,
            seed: 0,
            tolerances: Tolerances::default(),
            output_path: None,
            format: Format::Csv,
            jobs: 0,
        }
    }
}

impl ScanConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse { path: path.to_owned(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead { path: path.to_owned(), source })?;
        Self::from_toml(&text, path)
    }

    /// Config file (if any) with flags applied on top, validated.
    pub fn resolve(args: &GlobalArgs) -> CliResult<Self> {
        let mut config = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        config.apply(args);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, args: &GlobalArgs) {
        if let Some(p) = args.p {
            self.p = p;
        }
        if let Some(r) = args.r {
            self.r = r;
        }
        if let Some(grid) = args.delta_ratio {
            self.delta_grid = grid;
        }
        if let Some(n) = args.n_max {
            self.n_max = n;
        }
        if let Some(h) = args.horizon {
            self.horizon = h;
        }
        if let Some(b) = args.log_base {
            self.log_base = b.into();
        }
        if let Some(s) = args.seed {
            self.seed = s;
        }
        if let Some(j) = args.jobs {
            self.jobs = j;
        }
        if let Some(f) = args.format {
            self.format = f;
        }
        if let Some(out) = &args.out {
            self.output_path = Some(out.clone());
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let finite = |field: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(CliError::usage(field, format!("{x} is not finite")))
            }
        };
        finite("p", self.p)?;
        finite("r", self.r)?;
        finite("delta_grid.min", self.delta_grid.min)?;
        finite("delta_grid.max", self.delta_grid.max)?;
        if !(0.0..=0.5).contains(&self.p) {
            return Err(CliError::usage("p", format!("{} is outside [0, 1/2]", self.p)));
        }
        if self.r < 0.0 {
            return Err(CliError::usage("r", format!("{} is negative", self.r)));
        }
        if 1.0 - 2.0 * self.p - self.r < -1e-14 {
            return Err(CliError::usage("r", format!("p0 = 1 - 2p - r = {} is negative", 1.0 - 2.0 * self.p - self.r)));
        }
        let grid = &self.delta_grid;
        if grid.steps < 2 {
            return Err(CliError::usage("delta_grid.steps", format!("{} is below 2", grid.steps)));
        }
        for (field, x) in [("delta_grid.min", grid.min), ("delta_grid.max", grid.max)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(CliError::usage(field, format!("Δ/p = {x} is outside [0, 1]")));
            }
        }
        if grid.min >= grid.max {
            return Err(CliError::usage("delta_grid", format!("min {} is not below max {}", grid.min, grid.max)));
        }
        if self.n_max == 0 {
            return Err(CliError::usage("n_max", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(CliError::usage("horizon", "must be at least 1"));
        }
        for (field, x) in [
            ("tolerances.invariant", self.tolerances.invariant),
            ("tolerances.revival", self.tolerances.revival),
            ("tolerances.optimizer", self.tolerances.optimizer),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(CliError::usage(field, format!("{x} is not a non-negative number")));
            }
        }
        Ok(())
    }

    /// Δ values (not ratios) of the grid.
    pub fn deltas(&self) -> Vec<f64> {
        self.delta_grid.ratios().into_iter().map(|x| (x * self.p).min(self.p)).collect()
    }

    pub fn thread_pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::usage("jobs", e.to_string()))
    }
}
