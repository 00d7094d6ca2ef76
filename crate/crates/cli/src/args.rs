//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::DeltaGrid;

#[derive(Debug, Parser)]
#[command(name = "alfent", version, about = "Dynamical entropy and divisibility of a qubit collision model")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Flip probability p of the environment chain.
    #[arg(long, global = true)]
    pub p: Option<f64>,

    /// Weight r of the third symbol.
    #[arg(long, global = true)]
    pub r: Option<f64>,

    /// Grid over Δ/p as MIN:MAX:STEPS.
    #[arg(long = "delta-ratio", global = true, value_name = "MIN:MAX:STEPS")]
    pub delta_ratio: Option<DeltaGrid>,

    /// Number of collisions n (the measured sequence has n + 1 slots).
    #[arg(long = "nmax", global = true)]
    pub n_max: Option<usize>,

    /// Last step N of the divisibility check.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,

    #[arg(long = "log-base", global = true, value_enum)]
    pub log_base: Option<LogBaseArg>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for grid scans; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form, finite-n, chain and QR entropy rates over the Δ/p grid.
    Entropy,

    /// Divisibility regions and entropy over the Δ/p grid.
    Scan {
        /// Also render the regions as SVG.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },

    /// Run the cross-check suite.
    Verify {
        /// Run only the named checks (repeatable).
        #[arg(long = "check", value_name = "NAME")]
        checks: Vec<String>,

        /// List the registered checks and exit.
        #[arg(long)]
        list: bool,

        /// Corrupt one entry of the Pauli sign table before running.
        #[arg(long, hide = true)]
        inject_sign_error: bool,
    },

    /// Trace-norm trajectory of Λₙ[x₀𝟙 + x·σ].
    Revivals {
        /// Bloch vector as X1,X2,X3.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        x: Vec<f64>,

        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x0: f64,

        /// Δ/p at which the trajectory is taken.
        #[arg(long, default_value_t = 1.0)]
        ratio: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBaseArg {
    #[value(name = "e")]
    E,
    #[value(name = "2")]
    Two,
}

impl From<LogBaseArg> for alfent_core::LogBase {
    fn from(b: LogBaseArg) -> Self {
        match b {
            LogBaseArg::E => alfent_core::LogBase::E,
            LogBaseArg::Two => alfent_core::LogBase::Two,
        }
    }
}
