//! End-to-end runs of the `qctx` binary.

use std::path::Path;
use std::process::{Command, Output};

fn qctx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qctx"))
        .args(args)
        .env_remove("QCTX_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn experiment_defaults() {
    let o = qctx(&["experiment"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .take(3)
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(rows[0], ["1", "0.333333333333", "0", "0"], "{text}");
    assert_eq!(rows[1], ["2", "0", "0.166666666667", "0.166666666667"]);
    assert_eq!(rows[2], ["3", "0", "0.166666666667", "0.166666666667"]);
    assert!(text.contains("trace 10.5"));
    assert!(text.contains("non-contextual prediction confirmed"));
}

#[test]
fn experiment_json_round_trips_floats() {
    let o = qctx(&[
        "experiment",
        "--format",
        "json",
        "--labels1",
        "0,1,-2",
        "--labels2",
        "3,0.5,7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // (1/6)[2αδ + (β+γ)(ε+ζ)] with α=0 → (1/6)(−1)(7.5)
    let want = -7.5 / 6.0;
    let got = v["expectation_closed_form"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-15);
}

#[test]
fn experiment_csv_has_nine_cells() {
    let o = qctx(&["experiment", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    assert!(text.starts_with("side1_label,side2_label,probability\n"));
}

#[test]
fn bundled_diagram_checks_out() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fig1.gdl");
    for args in [
        vec!["diagram-check"],
        vec!["diagram-check", path.to_str().unwrap()],
    ] {
        let o = qctx(&args);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains("5 rays, 2 contexts"), "{text}");
        assert!(
            text.contains("interlink d = (0, 1, 0) shared by red, blue"),
            "{text}"
        );
        assert!(text.trim_end().ends_with("valid"));
    }
}

#[test]
fn invalid_diagram_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gdl");
    std::fs::write(
        &bad,
        "ray a = (1,0,0)\nray b = (1,1,0)\nray c = (0,0,1)\ncontext k = { a, b, c }\n",
    )
    .unwrap();
    let o = qctx(&["diagram-check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("invalid"));

    let syntax = dir.path().join("syntax.gdl");
    std::fs::write(&syntax, "ray a = (1, 0)\n").unwrap();
    let o = qctx(&["diagram-check", syntax.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1:14"));

    let o = qctx(&[
        "diagram-check",
        dir.path().join("missing.gdl").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let args = [
        "sample", "--shots", "1000000", "--seed", "42", "--format", "json",
    ];
    let a = qctx(&args);
    let b = qctx(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a), qctx::acceptance::GOLDEN_TALLY);
}

#[test]
fn parallel_sample_is_deterministic() {
    let args = [
        "sample",
        "--shots",
        "100001",
        "--streams",
        "4",
        "--format",
        "csv",
    ];
    let a = qctx(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, qctx(&args).stdout);
    let total: u64 = stdout(&a)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 100_001);
}

#[test]
fn seed_from_environment_and_flag_precedence() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qctx"));
        cmd.args(["sample", "--shots", "1000", "--format", "json"])
            .env_remove("QCTX_SEED");
        if let Some(s) = env {
            cmd.env("QCTX_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        let v: serde_json::Value = serde_json::from_slice(&cmd.output().unwrap().stdout).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 42);
    assert_eq!(run(Some("9"), None), 9);
    assert_eq!(run(Some("9"), Some("5")), 5);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = qctx(&[
        "sample",
        "--shots",
        "500",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["shots"], 500);
}

#[test]
fn bad_flags_exit_nonzero() {
    for args in [
        vec!["experiment", "--labels1", "1,1,2"],
        vec!["experiment", "--labels1", "1,2"],
        vec!["sample", "--shots", "0"],
        vec!["sample", "--format", "yaml"],
        vec!["report", "--tol", "bogus=1"],
        vec!["report", "--tol", "eq3=-1"],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = qctx(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn verify_eq3_and_tolerance_override() {
    let o = qctx(&["verify-eq3", "--pairs", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    let o = qctx(&["verify-eq3", "--pairs", "50", "--tol", "eq3=0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_lists_nine_criteria() {
    let o = qctx(&["report"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for id in 1..=9 {
        assert!(text.contains(&format!("[PASS] {id}. ")), "{text}");
    }
    assert!(text.contains("9/9 criteria passed"));
}
