use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bellbound(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellbound"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn report(args: &[&str], cwd: &Path) -> Value {
    let out = bellbound(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in [
        "command",
        "version",
        "seed",
        "inputs",
        "results",
        "paper_comparison",
    ] {
        assert!(v.get(key).is_some(), "{args:?} report lacks {key}");
    }
    assert_eq!(v["command"], args[0]);
    for row in v["paper_comparison"].as_array().unwrap() {
        let (p, c, d) = (
            row["paper_value"].as_f64().unwrap(),
            row["computed_value"].as_f64().unwrap(),
            row["difference"].as_f64().unwrap(),
        );
        assert!(row["label"].is_string());
        assert_eq!(d, (c - p).abs());
    }
    v
}

fn comparison(v: &Value) -> Vec<(String, f64, f64)> {
    v["paper_comparison"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["label"].as_str().unwrap().to_string(),
                r["paper_value"].as_f64().unwrap(),
                r["computed_value"].as_f64().unwrap(),
            )
        })
        .collect()
}

#[test]
fn every_subcommand_emits_a_parseable_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    report(&["generate", "--family", "chsh", "--out", "c.json"], p);
    report(
        &[
            "generate", "--family", "tensor", "--d", "2", "--out", "t2.json",
        ],
        p,
    );

    let c = report(&["classical", "--matrix", "t2.json"], p);
    assert_eq!(c["results"]["bound"], 8.0);
    assert_eq!(c["seed"], Value::Null);
    assert_eq!(comparison(&c)[0].1, 8.0);

    let q = report(
        &[
            "quantum",
            "--matrix",
            "c.json",
            "--restarts",
            "8",
            "--tol",
            "1e-7",
            "--seed",
            "1",
        ],
        p,
    );
    assert_eq!(q["seed"], 1);
    assert!((q["results"]["objective"].as_f64().unwrap() - 2.8284271).abs() < 1e-7);
    assert!(q["results"]["gap"].as_f64().unwrap() <= 1e-7);

    let e = report(&["expand", "--matrix", "t2.json", "--commuting"], p);
    assert_eq!(e["results"]["commutator_terms"], 0);
    assert_eq!(e["results"]["anticommutator_terms"], 12);
    assert_eq!(e["results"]["norm_estimate"], 8.0);

    let est = report(&["estimate", "--d", "2", "--normalized"], p);
    let rows = comparison(&est);
    assert_eq!(rows[0].1, 1.58);
    assert!((rows[0].2 - 1.5811).abs() < 1e-4);

    let r = report(
        &[
            "realize",
            "--matrix",
            "c.json",
            "--seed",
            "0",
            "--out",
            "real.json",
        ],
        p,
    );
    assert!(r["results"]["difference"].as_f64().unwrap() <= 1e-9);
    let dump: Value = serde_json::from_slice(&std::fs::read(p.join("real.json")).unwrap()).unwrap();
    assert!(dump.is_object());

    let s = report(
        &[
            "search",
            "--n",
            "2",
            "--m",
            "2",
            "--iters",
            "100",
            "--seed",
            "4",
            "--ledger",
            "board.jsonl",
        ],
        p,
    );
    report(
        &[
            "search",
            "--n",
            "1",
            "--m",
            "3",
            "--iters",
            "10",
            "--seed",
            "4",
            "--ledger",
            "board.jsonl",
        ],
        p,
    );
    let rep = report(&["report", "--ledger", "board.jsonl"], p);
    assert_eq!(rep["results"]["records"], 2);
    assert_eq!(rep["results"]["best_by_shape"].as_array().unwrap().len(), 2);
    assert_eq!(
        rep["results"]["best_by_shape"][1]["ratio"],
        s["results"]["best"]["ratio"]
    );
}

#[test]
fn certificate_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    report(
        &[
            "generate", "--family", "tensor", "--d", "2", "--out", "t2.json",
        ],
        p,
    );
    let q = report(
        &[
            "quantum",
            "--matrix",
            "t2.json",
            "--certificate",
            "cert.json",
        ],
        p,
    );
    let cert: Value = serde_json::from_slice(&std::fs::read(p.join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert["upper_bound"], q["results"]["upper_bound"]);
    assert_eq!(cert["u"].as_array().unwrap().len(), 4);
    assert!(cert["min_eigenvalue"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn identical_invocations_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("a.json"),
        r#"{"rows":3,"cols":4,"entries":[[0.3,-1.2,0.8,0.1],[1.1,0.4,-0.7,0.9],[-0.5,0.6,0.2,-1.3]]}"#,
    )
    .unwrap();
    let args = ["quantum", "--matrix", "a.json", "--seed", "9"];
    let a = bellbound(&args, p);
    let b = bellbound(&args, p);
    assert_eq!(a.stdout, b.stdout);
    let one_thread = Command::new(env!("CARGO_BIN_EXE_bellbound"))
        .args(args)
        .current_dir(p)
        .env("BELLBOUND_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, one_thread.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(bellbound(&["nonsense"], p).status.code(), Some(2));
    assert_eq!(bellbound(&["classical"], p).status.code(), Some(2));
    assert_eq!(
        bellbound(&["estimate", "--d", "2", "--normalized", "--commuting"], p)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bellbound(
            &["generate", "--family", "tensor", "--d", "13", "--out", "x.json"],
            p
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        bellbound(&["estimate", "--d", "1", "--commuting"], p)
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        bellbound(&["estimate", "--d", "1", "--normalized"], p)
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        bellbound(&["classical", "--matrix", "missing.json"], p)
            .status
            .code(),
        Some(1)
    );

    std::fs::write(
        p.join("bad.json"),
        r#"{"rows":2,"cols":2,"entries":[[1,2],[3]]}"#,
    )
    .unwrap();
    let bad = bellbound(&["classical", "--matrix", "bad.json"], p);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("entries[1]"));
    assert!(bad.stdout.is_empty());

    // a single sweep cannot certify a generic matrix to 1e-14
    std::fs::write(
        p.join("g.json"),
        r#"{"rows":5,"cols":5,"entries":[[0.3,-1.2,0.8,0.1,0.7],[1.1,0.4,-0.7,0.9,-0.2],[-0.5,0.6,0.2,-1.3,0.4],[0.9,-0.1,0.5,0.3,-0.8],[0.2,0.7,-1.1,0.6,0.1]]}"#,
    )
    .unwrap();
    let loose = [
        "quantum",
        "--matrix",
        "g.json",
        "--max-iters",
        "1",
        "--restarts",
        "1",
        "--tol",
        "1e-14",
    ];
    let strict: Vec<&str> = loose.iter().copied().chain(["--strict"]).collect();
    assert_eq!(bellbound(&loose, p).status.code(), Some(0));
    let out = bellbound(&strict, p);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["converged"], false);

    let threads = Command::new(env!("CARGO_BIN_EXE_bellbound"))
        .args(["estimate", "--d", "2"])
        .env("BELLBOUND_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn comparison_rows_only_for_the_reference_family() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("u.json"),
        r#"{"rows":2,"cols":2,"entries":[[1,1],[1,1]]}"#,
    )
    .unwrap();
    let c = report(&["classical", "--matrix", "u.json"], p);
    assert!(comparison(&c).is_empty());
    let q = report(&["quantum", "--matrix", "u.json"], p);
    assert!(comparison(&q).is_empty());
}
