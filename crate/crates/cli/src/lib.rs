//! Library side of the `alfent` binary: configuration, the four subcommands
//! and their CSV/JSON/SVG writers.
//!
//! Exit status: 0 success, 1 usage error, 2 failed verification, 3 violated
//! numerical invariant.

pub mod args;
pub mod config;
pub mod entropy;
pub mod error;
pub mod output;
pub mod revivals;
pub mod scan;
pub mod svg;
pub mod verify;

use std::io::Write;

use args::{Cli, Command};
use config::ScanConfig;
use error::CliResult;

/// How a successful run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Success,
    VerificationFailed(Vec<String>),
    InvariantViolated(Vec<String>),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Success => 0,
            Status::VerificationFailed(_) => 2,
            Status::InvariantViolated(_) => 3,
        }
    }

    fn from_violations(v: Vec<String>) -> Self {
        if v.is_empty() {
            Status::Success
        } else {
            Status::InvariantViolated(v)
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<Status> {
    let config = ScanConfig::resolve(&cli.global)?;
    let out = config.output_path.as_deref();
    match &cli.command {
        Command::Entropy => {
            let data = entropy::compute(&config)?;
            output::emit(config.format, entropy::SCHEMA, &data.rows, &data, out)?;
            Ok(Status::from_violations(entropy::invariant_violations(&data)))
        }
        Command::Scan { svg } => {
            let data = scan::compute(&config)?;
            output::emit(config.format, scan::SCHEMA, &data.rows, &data, out)?;
            if let Some(path) = svg {
                std::fs::write(path, svg::render(&data))?;
            }
            Ok(Status::from_violations(scan::invariant_violations(&data)))
        }
        Command::Revivals { x, x0, ratio } => {
            let x: [f64; 3] =
                x.as_slice().try_into().map_err(|_| error::CliError::usage("x", "expects three values"))?;
            let data = revivals::compute(&config, *x0, x, *ratio)?;
            output::emit(config.format, revivals::SCHEMA, &data.rows, &data, out)?;
            Ok(Status::Success)
        }
        Command::Verify { checks, list, inject_sign_error } => {
            if *list {
                let mut text = String::new();
                for c in verify::CHECKS {
                    text.push_str(&format!("{:<24} {}\n", c.name, c.about));
                }
                output::write_text(&text, out)?;
                return Ok(Status::Success);
            }
            let mut ctx = verify::VerifyContext::new(config.seed, config.jobs);
            if *inject_sign_error {
                ctx = ctx.with_sign_error();
            }
            let summary = verify::run(&ctx, checks)?;
            output::emit(config.format, verify::SCHEMA, &summary.checks, &summary, out)?;
            let mut err = std::io::stderr().lock();
            for c in &summary.checks {
                let _ = writeln!(
                    err,
                    "{} {:<24} {:>7.2}s  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.seconds,
                    c.detail
                );
            }
            let _ = writeln!(err, "{} passed, {} failed in {:.1}s", summary.passed, summary.failed, summary.seconds);
            let failed: Vec<String> = summary.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
            Ok(if failed.is_empty() { Status::Success } else { Status::VerificationFailed(failed) })
        }
    }
}
