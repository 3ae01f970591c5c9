use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn treecast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treecast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = treecast(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn regime_reports_critical_point() {
    let v = json(&["regime", "--family", "vsi", "--alpha", "0", "--q", "0.3"]);
    assert_eq!(v["f_alpha"], 0.25);
    assert_eq!(v["regime"], "Diffusive");

    let v = json(&[
        "regime",
        "--family",
        "se",
        "--alpha-neg-d",
        "3",
        "--q",
        "0.125",
    ]);
    assert_eq!(v["regime"], "Critical");
}

#[test]
fn oracle_rmaj_prints_exact_value() {
    let v = json(&[
        "oracle", "--family", "vsi", "--alpha", "0", "--q", "0.2", "--N", "3", "--rmaj",
    ]);
    assert_eq!(v.as_f64(), Some(0.1));
}

#[test]
fn oracle_csv_has_metadata_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dist.csv");
    let out = treecast(&[
        "oracle",
        "--family",
        "se",
        "--alpha",
        "1",
        "--q",
        "0.1",
        "--N",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# family=se alpha=1"));
    assert_eq!(lines.next(), Some("d1,d2,prob"));
}

#[test]
fn sweep_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let out = treecast(&[
            "sweep",
            "--family",
            "se",
            "--alpha-neg-d",
            "3",
            "--N",
            "2000",
            "--reps",
            "200",
            "--q-start",
            "0",
            "--q-end",
            "0.5",
            "--q-step",
            "0.05",
            "--seed",
            "42",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stderr).contains("seed=42"));
        fs::read(path).unwrap()
    };
    let first = run("a.csv", "1");
    assert_eq!(first, run("b.csv", "1"));
    assert_eq!(first, run("c.csv", "3"));
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert_eq!(
        text.lines().next(),
        Some("family,alpha,q,N,replicates,estimate,ci_low,ci_high,f_alpha,regime")
    );
}

#[test]
fn stochastic_commands_require_seed() {
    let out = treecast(&[
        "walk", "--family", "vsi", "--alpha", "1", "--q", "0.1", "--N", "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &[
            "regime",
            "--family",
            "vsi",
            "--alpha-neg-d",
            "1",
            "--q",
            "0.1",
        ],
        &[
            "regime",
            "--family",
            "se",
            "--alpha-neg-d",
            "2",
            "--q",
            "0.1",
        ],
        &["regime", "--family", "tri", "--alpha", "1", "--q", "0.1"],
        &[
            "regime",
            "--family",
            "vsi",
            "--alpha",
            "1",
            "--alpha-neg-d",
            "3",
            "--q",
            "0.1",
        ],
        &["regime", "--family", "vsi", "--alpha", "1", "--q", "1.5"],
        &[
            "oracle", "--family", "vsi", "--alpha", "1", "--q", "0.1", "--N", "50", "--cap", "10",
        ],
        &["frobnicate"],
    ];
    for args in cases {
        let out = treecast(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn walk_reports_stopping_times() {
    let v = json(&[
        "walk", "--family", "vsi", "--alpha", "1", "--q", "0", "--N", "100", "--seed", "1",
    ]);
    assert_eq!(v["delta1"], 100);
    assert_eq!(v["delta2"], 99);

    let v = json(&[
        "walk",
        "--family",
        "vsi",
        "--alpha",
        "1",
        "--q",
        "0.01",
        "--N",
        "2000",
        "--seed",
        "9",
        "--stopping",
        "--trajectory",
        "--stride",
        "100",
        "--track-y",
    ]);
    assert!(v["stopping"]["tau_high"].is_u64());
    assert_eq!(v["trajectory"].as_array().unwrap().len(), 21);
}

#[test]
fn broadcast_and_urn_agree_on_no_flip() {
    let b = json(&[
        "broadcast",
        "--family",
        "se",
        "--alpha",
        "2",
        "--q",
        "0",
        "--N",
        "50",
        "--seed",
        "3",
    ]);
    assert_eq!(b["delta1"], 50);
    assert_eq!(b["delta2"], 98);
    let u = json(&[
        "urn", "--family", "se", "--alpha", "2", "--q", "0", "--N", "50", "--seed", "3",
    ]);
    assert_eq!(u["delta1"], 50);
    assert_eq!(u["delta2"], 98);
}

#[test]
fn grow_writes_parent_array() {
    let v = json(&[
        "grow",
        "--family",
        "vsi",
        "--alpha-neg-d",
        "2",
        "--N",
        "200",
        "--seed",
        "4",
    ]);
    assert_eq!(v["parents"].as_array().unwrap().len(), 199);
    assert!(v["max_outdegree"].as_u64().unwrap() <= 2);
}

#[test]
fn diagnostics_table_and_martingale_report() {
    let v = json(&[
        "diagnostics",
        "--family",
        "vsi",
        "--alpha",
        "0",
        "--q",
        "0,0.05,0.45",
        "--N",
        "1000",
        "--reps",
        "50",
        "--seed",
        "8",
    ]);
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(records[0]["p_escape"], 1.0);
    assert!(records[0]["event_A_freq"].is_null());
    let m = v["supermartingale"].as_array().unwrap();
    assert_eq!(m[2]["status"], "OutsideRegime");
}

#[test]
fn spectrum_includes_numerical_check() {
    let v = json(&["spectrum", "--family", "vsi", "--alpha", "1", "--q", "0.2"]);
    let numerical = v["numerical_eigenvalues"].as_array().unwrap();
    assert!((numerical[0].as_f64().unwrap() - v["lambda1"].as_f64().unwrap()).abs() < 1e-9);
}
