//! End-to-end tests against the built binary: the exit-code matrix,
//! byte-level reproducibility of outputs, and the documented file formats.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rkhs-sgd"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to spawn the binary")
}

fn assert_exit(out: &Output, code: i32, context: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{context}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

// Small but non-degenerate experiment flags used in most tests; kmax 2048
// gives eight checkpoints, so the fit window holds the four points the
// rate fit needs.
const SMALL: &[&str] = &[
    "experiment",
    "--n",
    "10",
    "--kmax",
    "2048",
    "--trials",
    "12",
    "--seed",
    "5",
];

#[test]
fn exit_codes_follow_the_documented_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // The full default configuration is the documented success case.
    let ok = run_in(d, &["experiment", "--out-prefix", "ok"]);
    assert_exit(&ok, 0, "default experiment");

    let one_trial = run_in(
        d,
        &[
            "experiment",
            "--trials",
            "1",
            "--out-prefix",
            "one",
        ],
    );
    assert_exit(&one_trial, 2, "--trials 1 must be a config error");
    assert!(
        String::from_utf8_lossy(&one_trial.stderr).contains("trials"),
        "error should name the trials constraint"
    );

    let bad_mean = run_in(
        d,
        &[SMALL, &["--scaling", "0.5:0.5,2.0:0.5", "--out-prefix", "sc"]].concat(),
    );
    assert_exit(&bad_mean, 2, "scaling law with mean 1.25");
    assert!(
        String::from_utf8_lossy(&bad_mean.stderr).contains("mean"),
        "error should name the unit-mean constraint"
    );

    let bad_sum = run_in(
        d,
        &[SMALL, &["--scaling", "0.5:0.4,1.5:0.4", "--out-prefix", "sc2"]].concat(),
    );
    assert_exit(&bad_sum, 2, "scaling probabilities summing to 0.8");

    let bad_checkpoints = run_in(
        d,
        &[SMALL, &["--checkpoints", "100,10", "--out-prefix", "cp"]].concat(),
    );
    assert_exit(&bad_checkpoints, 2, "decreasing checkpoints");

    let missing_data = run_in(
        d,
        &["solve-exact", "--data", "nope.csv", "--out", "sol"],
    );
    assert_exit(&missing_data, 2, "missing dataset file");

    let bad_flag = run_in(d, &["experiment", "--no-such-flag"]);
    assert_exit(&bad_flag, 2, "unknown flag (clap usage error)");

    let bad_env = bin()
        .current_dir(d)
        .args([SMALL, &["--out-prefix", "env"]].concat())
        .env("RKHS_SGD_WORKERS", "many")
        .output()
        .unwrap();
    assert_exit(&bad_env, 2, "unparsable worker env var");
}

#[test]
fn experiment_gate_failure_exits_one_and_names_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    // All checkpoints inside the warmup, where the error has barely moved:
    // the fitted slope is far above -0.8, so the slope gate must fail.
    let out = run_in(
        dir.path(),
        &[
            "experiment",
            "--n",
            "10",
            "--kmax",
            "8",
            "--checkpoints",
            "1,2,3,4,5,6,7,8",
            "--trials",
            "12",
            "--seed",
            "5",
            "--out-prefix",
            "warm",
        ],
    );
    assert_exit(&out, 1, "warmup-only experiment");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("slope gate"), "stderr: {stderr}");
    // Outputs are still written so the failure can be inspected.
    let summary: Value =
        serde_json::from_str(&read(&dir.path().join("warm_summary.json"))).unwrap();
    assert_eq!(summary["gates"]["slope_pass"], Value::Bool(false));
}

#[test]
fn experiment_outputs_are_byte_identical_across_reruns_and_worker_counts() {
    // Gate outcomes are irrelevant here; files are written either way and
    // must not depend on scheduling.
    let run_with = |extra: &[&str]| {
        let dir = tempfile::tempdir().unwrap();
        let out = run_in(dir.path(), &[SMALL, &["--out-prefix", "exp"], extra].concat());
        assert!(
            matches!(out.status.code(), Some(0) | Some(1)),
            "config must at least run: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        (
            read(&dir.path().join("exp_curve.csv")),
            read(&dir.path().join("exp_summary.json")),
        )
    };
    let (curve_a, summary_a) = run_with(&[]);
    let (curve_b, summary_b) = run_with(&[]);
    assert_eq!(curve_a, curve_b, "rerun changed the curve bytes");
    assert_eq!(summary_a, summary_b, "rerun changed the summary bytes");
    let (curve_w1, _) = run_with(&["--workers", "1"]);
    let (curve_w4, _) = run_with(&["--workers", "4"]);
    assert_eq!(curve_w1, curve_a, "worker pool changed the curve");
    assert_eq!(curve_w4, curve_a, "worker count changed the curve");
    // The env var is an alternative spelling of --workers.
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([SMALL, &["--out-prefix", "exp"]].concat())
        .env("RKHS_SGD_WORKERS", "2")
        .output()
        .unwrap();
    assert!(
        matches!(out.status.code(), Some(0) | Some(1)),
        "worker env var run failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read(&dir.path().join("exp_curve.csv")), curve_a);
}

#[test]
fn gen_data_is_deterministic_and_shaped_as_documented() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "gen-data", "--n", "50", "--d", "2", "--m", "2", "--seed", "3", "--out",
    ];
    assert_exit(&run_in(d, &[&args[..], &["a.csv"]].concat()), 0, "gen a");
    assert_exit(&run_in(d, &[&args[..], &["b.csv"]].concat()), 0, "gen b");
    let a = read(&d.join("a.csv"));
    assert_eq!(a, read(&d.join("b.csv")), "same seed, different bytes");
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("x1,x2,y1,y2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50);
    for row in rows {
        assert_eq!(row.split(',').count(), 4);
        for cell in row.split(',') {
            cell.parse::<f64>().unwrap();
        }
    }

    // Single zero-target point with no noise: one row, y exactly 0.
    let out = run_in(
        d,
        &[
            "gen-data", "--n", "1", "--d", "1", "--m", "1", "--fn", "zero", "--noise", "0",
            "--seed", "1", "--out", "zero.csv",
        ],
    );
    assert_exit(&out, 0, "zero gen");
    let text = read(&d.join("zero.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,y1"));
    let row = lines.next().unwrap();
    let y: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(y, 0.0);
    assert!(lines.next().is_none());
}

#[test]
fn solve_exact_matches_hand_algebra_and_reports_the_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // One point, q = 1/2: the normal equations are (G + alpha I) c = y
    // with G = [1] and alpha = n q / (1 - q) = 1, so c = y / 2 = 1.5.
    std::fs::write(d.join("one.csv"), "x1,y1\n0,3\n").unwrap();
    let out = run_in(
        d,
        &["solve-exact", "--data", "one.csv", "--q", "0.5", "--out", "sol"],
    );
    assert_exit(&out, 0, "n=1 unconstrained solve");
    let csv = read(&d.join("sol.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("c1"));
    let c: f64 = lines.next().unwrap().parse().unwrap();
    assert!((c - 1.5).abs() <= 1e-12, "c = {c}");
    let report: Value = serde_json::from_str(&read(&d.join("sol.json"))).unwrap();
    assert_eq!(report["multiplier"].as_f64().unwrap(), 0.0);
    assert!((report["norm_h"].as_f64().unwrap() - 1.5).abs() <= 1e-12);

    // Radius half the unconstrained norm: boundary solution with
    // (1 + alpha(mu)) c = 3, |c| = 0.75, hence alpha = 3 and mu = 1.
    let out = run_in(
        d,
        &[
            "solve-exact", "--data", "one.csv", "--q", "0.5", "--r", "0.75", "--out", "ball",
        ],
    );
    assert_exit(&out, 0, "n=1 constrained solve");
    let report: Value = serde_json::from_str(&read(&d.join("ball.json"))).unwrap();
    let mu = report["multiplier"].as_f64().unwrap();
    let norm = report["norm_h"].as_f64().unwrap();
    assert!((mu - 1.0).abs() <= 1e-8, "mu = {mu}");
    assert!((norm - 0.75).abs() <= 1e-10 * 0.75, "norm = {norm}");

    // Zero targets give the zero function exactly.
    let gen = run_in(
        d,
        &[
            "gen-data", "--n", "6", "--d", "2", "--m", "2", "--fn", "zero", "--noise", "0",
            "--seed", "2", "--out", "zeros.csv",
        ],
    );
    assert_exit(&gen, 0, "zero dataset");
    let out = run_in(
        d,
        &["solve-exact", "--data", "zeros.csv", "--out", "zsol"],
    );
    assert_exit(&out, 0, "zero solve");
    let csv = read(&d.join("zsol.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("c1,c2"));
    for row in lines {
        for cell in row.split(',') {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
        }
    }
    let report: Value = serde_json::from_str(&read(&d.join("zsol.json"))).unwrap();
    assert_eq!(report["norm_h"].as_f64().unwrap(), 0.0);
}

#[test]
fn verify_subcommand_reports_suites_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run_in(dir.path(), &["verify", "--seed", "1"]);
    assert_exit(&ok, 0, "verify at the default seed");
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("reproducing_property"));
    assert!(stdout.contains("all 22 suites passed"));
    assert!(!stdout.contains("FAIL"));

    let corrupt = run_in(dir.path(), &["verify", "--seed", "1", "--corrupt-gram"]);
    assert_exit(&corrupt, 1, "corrupted Gram negative control");
    let stdout = String::from_utf8_lossy(&corrupt.stdout);
    assert!(stdout.contains("reproducing_property         FAIL"));
}
