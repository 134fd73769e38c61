use std::path::Path;
use std::process::Command;

use puf_spectra::cli::{run, EXIT_DATA, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["puf-spectra"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Small but non-trivial population: 16 stages, 6 instances, 400 challenges.
fn simulate(dir: &Path, extra: &[&str]) -> Run {
    let mut args = vec!["simulate", "--stages", "16", "--instances", "6", "--challenges", "400", "--measurements", "3", "--out", p(dir)];
    args.extend_from_slice(extra);
    cli(&args)
}

#[test]
fn theory_m1_matches_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["theory", "--m", "1", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS, "{}", r.stderr);
    let csv = read(&dir.path().join("theory_m1.csv"));
    assert_eq!(csv, r.stdout);
    assert!(csv.starts_with("# config {"));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows, ["-1,2,4,0.25", "0,1,8,0.5", "1,0,4,0.25"]);
    assert!(csv.contains("# oracle: enumeration of all ordered pairs agrees on all 3 lattice points"));
}

#[test]
fn theory_range_and_oracle_limit() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["theory", "--m", "17", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("m = 17"));
    assert_eq!(cli(&["theory", "--m", "0", "--out", p(dir.path())]).code, EXIT_USAGE);

    let r = cli(&["theory", "--m", "5", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS);
    assert!(r.stdout.contains("# oracle: skipped"));
    assert_eq!(r.stdout.lines().filter(|l| !l.starts_with('#')).count(), 1 + 33);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&[]).code, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(cli(&["theory", "--m", "x"]).code, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let r = simulate(dir.path(), &["--fault", "0:all:1"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert_eq!(simulate(dir.path(), &["--fault", "17:all:1"]).code, EXIT_USAGE);
    assert_eq!(simulate(dir.path(), &["--measurements", "4"]).code, EXIT_USAGE);
    assert!(!dir.path().join("correct.crp").exists());
    assert_eq!(cli(&["help"]).code, EXIT_PASS);
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let r = simulate(a.path(), &["--fault", "10:all:1"]);
    assert_eq!(r.code, EXIT_PASS, "{}", r.stderr);
    assert!(r.stdout.contains("mean uniformity"));
    assert_eq!(simulate(b.path(), &["--fault", "10:all:1"]).code, EXIT_PASS);
    for f in ["correct.crp", "faulty.crp"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let crp = read(&a.path().join("faulty.crp"));
    assert!(crp.contains("fault=10:all:1:out-top"));
    assert!(crp.contains("# config {"));
    assert_eq!(crp.lines().filter(|l| !l.starts_with('#')).count(), 6 * 400);

    let c = tempfile::tempdir().unwrap();
    simulate(c.path(), &["--seed", "2"]);
    assert_ne!(read(&a.path().join("correct.crp")), read(&c.path().join("correct.crp")));
}

#[test]
fn single_instance_population() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&["simulate", "--instances", "1", "--challenges", "10", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS, "{}", r.stderr);
    let r = cli(&["spectra", p(&dir.path().join("correct.crp")), "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("at least 2"));
}

#[test]
fn spectra_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let crp = dir.path().join("two.crp");
    std::fs::write(
        &crp,
        "# puf-spectra crp params=x seed=1 k=1 fault=none n_stages=8\n\
         7,0000000000000001,1000\n7,0000000000000002,0100\n\
         9,0000000000000001,1010\n9,0000000000000002,0111\n",
    )
    .unwrap();
    let r = cli(&["spectra", p(&crp), "--buckets", "4", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS, "{}", r.stderr);
    // bit 1: [1,0] vs [1,0] equal; bit 2: [0,1] vs [0,1]; bit 3: [0,0] vs [1,1]; bit 4: [0,0] vs [0,1]
    assert!(r.stdout.contains("bit 1: 1 pairs, mean 1.0000"));
    assert!(r.stdout.contains("bit 3: 1 pairs, mean -1.0000"));
    assert!(r.stdout.contains("bit 4: 1 pairs, mean 0.0000"));
    let raw = read(&dir.path().join("raw_bit3.csv"));
    assert!(raw.starts_with("# config {"));
    assert!(raw.contains("# input puf-spectra crp"));
    assert!(raw.contains("7,9,-1"));
    let hist = read(&dir.path().join("spectrum_bit4.csv"));
    let data: Vec<&str> = hist.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1 + 4);
    assert!(data[3].starts_with("0,0.5,1,"));
    assert!(read(&dir.path().join("spectrum_bit1.svg")).contains("<svg"));
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let crp = dir.path().join("bad.crp");
    std::fs::write(&crp, "# comment\n0,0000000000000001,1000\n0,00000000000001,1000\n").unwrap();
    let r = cli(&["spectra", p(&crp), "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("bad.crp:3:"), "{}", r.stderr);

    std::fs::write(&crp, "0,0000000000000001,10x0\n").unwrap();
    let r = cli(&["spectra", p(&crp), "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("bad.crp:1:"));

    let r = cli(&["spectra", p(&dir.path().join("missing.crp")), "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_DATA);
}

#[test]
fn compare_identical_populations_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate(dir.path(), &[]).code, EXIT_PASS);
    let c = dir.path().join("correct.crp");
    let r = cli(&["compare", p(&c), p(&c), "--buckets", "32", "--segments", "4", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("verdict: pass"));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("report.json"))).unwrap();
    for bit in report["bits"].as_array().unwrap() {
        assert_eq!(bit["kl"].as_f64().unwrap(), 0.0);
        for t in bit["cumulative_t"].as_array().unwrap() {
            assert!(t.is_null() || t.as_f64() == Some(0.0), "{t}");
        }
    }
    assert_eq!(report["config"]["buckets"], 32);
    assert_eq!(report["kl0_calibration"].as_array().unwrap().len(), 4);
    let csv = read(&dir.path().join("cumulative_t.csv"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 4);
    assert!(dir.path().join("cumulative_t_bit4.svg").exists());
}

#[test]
fn compare_detects_fault_and_mismatched_challenges() {
    let dir = tempfile::tempdir().unwrap();
    let r = cli(&[
        "simulate", "--stages", "16", "--instances", "20", "--challenges", "2000", "--measurements", "3",
        "--fault", "10:all:1", "--out", p(dir.path()),
    ]);
    assert_eq!(r.code, EXIT_PASS);
    let c = dir.path().join("correct.crp");
    let f = dir.path().join("faulty.crp");
    let r = cli(&["compare", p(&c), p(&f), "--buckets", "64", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_FAIL, "{}", r.stdout);
    assert!(r.stdout.contains("verdict: FAIL"));

    let other = tempfile::tempdir().unwrap();
    simulate(other.path(), &["--seed", "5"]);
    let r = cli(&["compare", p(&c), p(&other.path().join("correct.crp")), "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("different challenge sets"));

    assert_eq!(cli(&["compare", p(&c), p(&c), "--t0", "-1", "--out", p(dir.path())]).code, EXIT_USAGE);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"m": 2, "instances": 3, "challenges": 50, "n_stages": 12}"#).unwrap();
    let r = cli(&["theory", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS);
    assert!(dir.path().join("theory_m2.csv").exists());
    let r = cli(&["theory", "--config", p(&cfg), "--m", "3", "--out", p(dir.path())]);
    assert_eq!(r.code, EXIT_PASS);
    assert!(r.stdout.contains(r#""m":3"#));

    assert_eq!(cli(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]).code, EXIT_PASS);
    let crp = read(&dir.path().join("correct.crp"));
    assert!(crp.contains("n_stages=12"));
    assert!(crp.contains(r#""instances":3"#));
    assert_eq!(crp.lines().filter(|l| !l.starts_with('#')).count(), 150);

    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(cli(&["theory", "--config", p(&cfg)]).code, EXIT_USAGE);
    assert_eq!(cli(&["theory", "--config", p(&dir.path().join("nope.json"))]).code, EXIT_USAGE);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_puf-spectra");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe).args(["theory", "--m", "2", "--out", p(dir.path())]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("# oracle"));
    let bad = Command::new(exe).args(["theory", "--m", "99"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}
