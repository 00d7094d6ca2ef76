use std::path::Path;
use std::process::{Command, Output};

use alfent_cli::entropy::EntropyRow;
use alfent_cli::output::parse_csv;
use alfent_cli::revivals::RevivalRow;
use alfent_cli::scan::ScanDataset;
use alfent_cli::verify::VerifySummary;

fn alfent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alfent")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn entropy_csv_has_schema_header_and_one_row_per_step() {
    let o = alfent(&["entropy", "--delta-ratio", "0:1:4", "--nmax", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema: alfent-entropy/v1"));
    assert!(lines.next().unwrap().starts_with("delta_ratio,delta,alf_entropy,finite_rate,chain_rate,qr_bound"));
    let (_, rows): (_, Vec<EntropyRow>) = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 4);
    let first = &rows[0];
    for v in [first.finite_rate, first.chain_rate, first.qr_bound] {
        assert!((v - first.alf_entropy).abs() < 1e-9);
    }
}

#[test]
fn entropy_vanishes_at_the_extreme_point() {
    let o = alfent(&["entropy", "--p", "0.5", "--r", "0", "--delta-ratio", "0:1:3", "--nmax", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows): (_, Vec<EntropyRow>) = parse_csv(&stdout(&o)).unwrap();
    assert!(rows[2].alf_entropy.abs() < 1e-12);
}

#[test]
fn scan_csv_columns_and_worker_independence() {
    let args = ["scan", "--delta-ratio", "0:1:6", "--horizon", "8"];
    let one = alfent(&[&args[..], &["--jobs", "1"]].concat());
    let three = alfent(&[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, three.stdout);
    let text = stdout(&one);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "delta_ratio,alf_entropy,chain_rate,mutual_info,region,cp_div,tensor_p_div,p_div,gns_p_div,first_failure_step,boundary"
    );
    assert_eq!(text.lines().count(), 2 + 6);
    assert!(text.lines().nth(2).unwrap().contains(",CP-div,true,true,true,true,,false"));
}

#[test]
fn scan_json_round_trips_and_renders_svg() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("scan.json");
    let svg = dir.path().join("scan.svg");
    let o = alfent(&[
        "scan",
        "--delta-ratio",
        "0.1:0.9:5",
        "--horizon",
        "6",
        "--format",
        "json",
        "--out",
        json.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&json).unwrap();
    let data: ScanDataset = serde_json::from_str(&text).unwrap();
    assert_eq!(data.schema, "alfent-scan/v1");
    assert_eq!(data.rows.len(), 5);
    assert_eq!(serde_json::to_string_pretty(&data).unwrap() + "\n", text);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, "p = 0.2\nr = 0.3\nformat = \"json\"\nn_max = 2\n[delta_grid]\nmin = 0.0\nmax = 1.0\nsteps = 3\n");
    let o = alfent(&["entropy", "--config", cfg.to_str().unwrap(), "--p", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["p"], 0.25);
    assert_eq!(v["config"]["r"], 0.3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_errors_exit_with_one_and_name_the_field() {
    let o = alfent(&["entropy", "--p", "0.7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`p`"), "{}", stderr(&o));

    let o = alfent(&["scan", "--delta-ratio", "0:1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = alfent(&["entropy", "--delta-ratio", "0:1:1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("delta_grid.steps"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "p = 0.25\nhorizont = 3\n");
    let o = alfent(&["scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizont"));

    assert_eq!(alfent(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(alfent(&["--help"]).status.code(), Some(0));
}

#[test]
fn revivals_sawtooth_and_row_count() {
    let o = alfent(&["revivals", "--p", "0.5", "--r", "0", "--ratio", "1", "--x", "1,1,1", "--nmax", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# schema: alfent-revivals/v1\nstep,trace_norm,difference,revival\n"));
    let (_, rows): (_, Vec<RevivalRow>) = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 7);
    let amp = 2.0 * (3f64.sqrt() - 1.0);
    for row in &rows[1..] {
        let sign = if row.step % 2 == 0 { 1.0 } else { -1.0 };
        assert!((row.difference.unwrap() - sign * amp).abs() < 1e-12);
    }

    let o = alfent(&["revivals", "--ratio", "0", "--x", "0.5,-0.2,0.1", "--nmax", "10"]);
    let (_, rows): (_, Vec<RevivalRow>) = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| !r.revival));

    let o = alfent(&["revivals", "--x", "0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = alfent(&["verify", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("divisibility_thresholds"));

    let o = alfent(&["verify", "--check", "sign_table", "--check", "closed_form_spectrum", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: VerifySummary = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((summary.passed, summary.failed), (2, 0));

    let o = alfent(&["verify", "--inject-sign-error", "--check", "closed_form_spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("closed_form_spectrum,false"));

    assert_eq!(alfent(&["verify", "--check", "nope"]).status.code(), Some(1));
}

#[test]
fn verify_deterministic_checks_ignore_seed() {
    let run = |seed: &str| {
        let o = alfent(&[
            "verify",
            "--seed",
            seed,
            "--format",
            "json",
            "--check",
            "entropy_identity",
            "--check",
            "revival_formulas",
            "--check",
            "qr_factorization",
        ]);
        let s: VerifySummary = serde_json::from_str(&stdout(&o)).unwrap();
        s.checks.into_iter().map(|c| (c.name, c.passed, c.value.to_bits(), c.detail)).collect::<Vec<_>>()
    };
    assert_eq!(run("1"), run("99"));
}
