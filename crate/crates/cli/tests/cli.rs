//! End-to-end tests of the sync-sim binary: exit codes, report files and
//! reproducibility.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use nbsync::{crb_reference, RunReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sync-sim"))
}

fn run_args(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("file readable")
}

/// Small payload-only scenario so every test finishes quickly.
fn tiny(out: &Path, extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = [
        "run",
        "--frame",
        "payload",
        "--payload-modulation",
        "dbpsk",
        "--payload-symbols",
        "30",
        "--trials",
        "5",
        "--snr-db",
        "10",
        "--tau",
        "0.1",
        "--mode",
        "da,soft",
        "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.push(out.display().to_string());
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

#[test]
fn run_writes_csv_reports_with_exact_headers() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path(), &[]);
    let output = bin().args(&args).output().unwrap();
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let printed = stdout(&output);
    assert!(printed.contains("curves.csv"));
    assert!(printed.contains("summary.csv"));

    let curves = read(&dir.path().join("curves.csv"));
    assert!(curves.starts_with(
        "mode,modulation,snr_db,tau_over_t,symbol_index,bias_mean,bias_ci_lo,bias_ci_hi\n"
    ));
    let summary = read(&dir.path().join("summary.csv"));
    assert!(summary.starts_with("mode,modulation,snr_db,tau_over_t,mse,mse_ci_lo,mse_ci_hi,crb\n"));
    // Two modes, one SNR, one delay: header plus two rows.
    assert_eq!(summary.trim_end().lines().count(), 3);
}

#[test]
fn identical_runs_are_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let run_a = bin().args(tiny(first.path(), &[])).output().unwrap();
    let run_b = bin().args(tiny(second.path(), &[])).output().unwrap();
    assert!(run_a.status.success() && run_b.status.success());
    for name in ["curves.csv", "summary.csv"] {
        assert_eq!(
            read(&first.path().join(name)),
            read(&second.path().join(name)),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn json_report_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path(), &["--format", "json"]);
    let output = bin().args(&args).output().unwrap();
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let report = RunReport::from_json(&read(&dir.path().join("report.json"))).unwrap();
    assert_eq!(report.cells.len(), 2);
    assert_eq!(report.meta.scenario.trials, 5);
}

#[test]
fn cli_overrides_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = tempfile::NamedTempFile::new().unwrap();
    write!(
        config,
        "frame = \"payload\"\n\
         payload_modulation = \"dbpsk\"\n\
         payload_symbols = 30\n\
         trials = 9\n\
         snr_db = [10.0]\n\
         tau = [0.1]\n\
         mode = \"da\"\n\
         format = \"json\"\n"
    )
    .unwrap();
    let output = run_args(&[
        "run",
        "--config",
        config.path().to_str().unwrap(),
        "--trials",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let report = RunReport::from_json(&read(&dir.path().join("report.json"))).unwrap();
    assert_eq!(report.meta.scenario.trials, 4, "flag must beat the file");
    assert_eq!(report.cells.len(), 1);
}

#[test]
fn scurve_writes_the_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_args(&[
        "scurve",
        "--frame",
        "payload",
        "--payload-modulation",
        "dqpsk",
        "--payload-symbols",
        "20",
        "--snr-db",
        "5",
        "--tau",
        "0",
        "--mode",
        "soft",
        "--grid-points",
        "5",
        "--frames",
        "2",
        "--lowcomplexity-tanh",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let text = read(&dir.path().join("scurve.csv"));
    assert!(text.starts_with("mode,modulation,snr_db,tau_over_t,u_over_t,mean_error\n"));
    // One mode, one SNR, one delay, five offsets.
    assert_eq!(text.trim_end().lines().count(), 6);
    assert!(text.lines().nth(1).unwrap().starts_with("soft,dqpsk,"));
}

#[test]
fn crb_matches_the_library_reference() {
    let output = run_args(&["crb", "--snr-db", "0,10", "--block-len", "100", "--rolloff", "0.3"]);
    assert_eq!(exit_code(&output), 0);
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "snr_db,block_len,rolloff,crb");
    for (line, snr_db) in lines.zip([0.0, 10.0]) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<f64>().unwrap(), snr_db);
        assert_eq!(fields[1], "100");
        let printed: f64 = fields[3].parse().unwrap();
        let expected = crb_reference(snr_db, 100, 0.3).unwrap();
        assert_eq!(printed, expected, "crb at {snr_db} dB");
    }
}

#[test]
fn invalid_configuration_exits_one() {
    let mut config = tempfile::NamedTempFile::new().unwrap();
    write!(config, "no_such_key = 1\n").unwrap();
    let output = run_args(&["run", "--config", config.path().to_str().unwrap()]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("unknown config key"));

    let output = run_args(&["run", "--tau", "0.9"]);
    assert_eq!(exit_code(&output), 1);

    let output = run_args(&["run", "--mode", "fuzzy"]);
    assert_eq!(exit_code(&output), 1);

    let output = run_args(&["run", "--trials", "many"]);
    assert_eq!(exit_code(&output), 1, "clap parse errors are config errors");
}

#[test]
fn missing_config_file_exits_one() {
    let output = run_args(&["run", "--config", "/definitely/not/here.toml"]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("cannot read config"));
}

#[test]
fn runtime_failure_exits_two() {
    // Infinite SNR is a valid noise-off scenario but cannot be encoded as
    // JSON, so the failure happens after configuration.
    let dir = tempfile::tempdir().unwrap();
    let output = run_args(&[
        "run",
        "--frame",
        "payload",
        "--payload-modulation",
        "dbpsk",
        "--payload-symbols",
        "20",
        "--trials",
        "2",
        "--snr-db",
        "inf",
        "--tau",
        "0.1",
        "--mode",
        "da",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 2, "stderr: {}", stderr(&output));
}

#[test]
fn help_and_bare_invocation_exit_codes() {
    let output = run_args(&["--help"]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("run"));

    let output = bin().output().unwrap();
    assert_eq!(exit_code(&output), 1, "missing subcommand is a usage error");
}
