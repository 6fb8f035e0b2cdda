//! End-to-end runs through the argument parser. Outputs are byte-compared
//! against the files in `tests/golden`; set `MECREP_BLESS=1` to regenerate.

use std::path::{Path, PathBuf};

use super::{execute, exit_code, Outcome};

/// Runs one command line, returning the process exit code it would produce.
fn run(args: &[&str]) -> u8 {
    let argv = std::iter::once("mecrep").chain(args.iter().copied());
    match execute(argv) {
        Outcome::Done => 0,
        Outcome::Clap(e) => e.exit_code() as u8,
        Outcome::Failed(e) => exit_code(&e),
    }
}

fn failure(args: &[&str]) -> String {
    let argv = std::iter::once("mecrep").chain(args.iter().copied());
    match execute(argv) {
        Outcome::Failed(e) => format!("{e:#}"),
        Outcome::Clap(e) => e.to_string(),
        Outcome::Done => panic!("{args:?} succeeded"),
    }
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = golden(name);
    if std::env::var_os("MECREP_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want =
        std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert!(
        want == actual,
        "{name} differs from golden:\n{}",
        String::from_utf8_lossy(actual)
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn tradeoff_binary_ten_by_ten() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let code = run(&[
        "tradeoff",
        "--m",
        "10",
        "--n",
        "10",
        "--mode",
        "binary",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 10);
    let corners: Vec<&str> = rows
        .iter()
        .filter(|l| l.split(',').nth(11) == Some("true"))
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(corners, vec!["5", "9"]);
    check_golden("tradeoff-binary-10-10.csv", csv.as_bytes());
    check_golden(
        "tradeoff-binary-10-10.json",
        &std::fs::read(out.with_extension("json")).unwrap(),
    );
}

#[test]
fn tradeoff_partial_three_by_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let code = run(&[
        "tradeoff",
        "--m",
        "3",
        "--n",
        "3",
        "--mode",
        "partial",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let ndlt: Vec<&str> = csv
        .lines()
        .filter(|l| l.starts_with("partial"))
        .map(|l| l.split(',').nth(5).unwrap())
        .collect();
    assert_eq!(ndlt, vec!["5/3", "4/3", "1"]);
    check_golden("tradeoff-partial-3-3.csv", csv.as_bytes());
}

#[test]
fn tradeoff_adjusts_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let code = run(&[
        "tradeoff",
        "--m",
        "4",
        "--n",
        "2",
        "--mode",
        "binary",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# adjustment=")));
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["adjustment"]["delta1"], 2);
    assert_eq!(side["adjustment"]["delta2"], 0);
    assert_eq!(side["N"], 4);
}

#[test]
fn out_dir_from_environment() {
    // The only test that relies on the default output location.
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var(super::OUT_DIR_ENV, dir.path());
    let code = run(&["tradeoff", "--m", "2", "--n", "2"]);
    std::env::remove_var(super::OUT_DIR_ENV);
    assert_eq!(code, 0);
    assert!(dir.path().join("tradeoff-M2-N2-binary.csv").exists());
    assert!(dir.path().join("tradeoff-M2-N2-binary.json").exists());
}

#[test]
fn converse_three_three_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let code = run(&[
        "converse",
        "--m",
        "3",
        "--n",
        "3",
        "--r",
        "2",
        "--mode",
        "binary",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let bytes = std::fs::read(&out).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["closed_form"], "3");
    assert_eq!(v["oracle"], "3");
    assert_eq!(v["match"], true);
    check_golden("converse-3-3-2-binary.json", &bytes);
}

#[test]
fn converse_partial_fractional_load() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let code = run(&[
        "converse",
        "--m",
        "4",
        "--n",
        "4",
        "--r",
        "3/2",
        "--mode",
        "partial",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["closed_form"], "3/2");
    assert_eq!(v["match"], true);
}

#[test]
fn verify_ia_small_uplink() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let code = run(&[
        "verify-ia",
        "--direction",
        "uplink",
        "--m",
        "2",
        "--n",
        "2",
        "--r",
        "1",
        "--s",
        "1",
        "--trials",
        "100",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let bytes = std::fs::read(&out).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["summary"]["full_rank_count"], 100);
    assert_eq!(v["summary"]["containment_ok"], true);
    check_golden("verify-ia-up-2-2-1-1.json", &bytes);
}

#[test]
fn simulate_small_report() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let code = run(&[
        "simulate",
        "--trials",
        "64",
        "--seed",
        "7",
        "--power-db",
        "10",
        "--power-db",
        "20",
        "--r",
        "1",
        "--r",
        "3",
        "--ltilde-ratio",
        "3",
        "--out",
        path_str(&json),
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(code, 0);
    check_golden("simulate-64.json", &std::fs::read(&json).unwrap());
    check_golden("simulate-64.csv", &std::fs::read(&csv).unwrap());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "M = 3\nN = 6\nmode = \"binary\"\n").unwrap();
    let out = dir.path().join("t.csv");
    let code = run(&[
        "--config",
        path_str(&cfg),
        "tradeoff",
        "--n",
        "9",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("binary,3,9,1,")));
}

#[test]
fn simulate_reads_powers_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "Pu_dB = 15\nPd_dB = 15\nLtilde_ratio = 2\ntrials = 10\n",
    )
    .unwrap();
    let csv = dir.path().join("r.csv");
    let code = run(&[
        "--config",
        path_str(&cfg),
        "simulate",
        "--r",
        "1",
        "--out",
        path_str(&dir.path().join("r.json")),
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("1,")).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1,15,15,2,"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "bogus = 1\n").unwrap();
    let out = dir.path().join("unused");
    for args in [
        vec!["tradeoff", "--m", "0", "--n", "3", "--out", path_str(&out)],
        vec!["converse", "--m", "3", "--n", "3", "--r", "9"],
        vec!["converse", "--m", "3", "--n", "3", "--r", "x"],
        vec![
            "verify-ia",
            "--direction",
            "downlink",
            "--m",
            "2",
            "--n",
            "2",
            "--r",
            "2",
            "--s",
            "1",
        ],
        vec![
            "verify-ia",
            "--direction",
            "uplink",
            "--m",
            "2",
            "--n",
            "4",
            "--r",
            "1",
            "--s",
            "4",
        ],
        vec!["simulate", "--trials", "0", "--out", path_str(&out)],
        vec!["--config", path_str(&bad_cfg), "simulate"],
        vec!["bogus"],
        vec!["tradeoff"],
    ] {
        assert_eq!(run(&args), 2, "{args:?}");
    }
    let msg = failure(&["tradeoff", "--m", "1", "--n", "3", "--out", path_str(&out)]);
    assert!(msg.contains("M must be"), "{msg}");
    assert!(failure(&["--config", path_str(&bad_cfg), "simulate"]).contains("bogus"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
}
