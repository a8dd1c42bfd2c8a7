use std::process::{Command, Output};

use serde_json::Value;

fn nlshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlshift"))
        .args(args)
        .env_remove("NLSHIFT_SEED")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = nlshift(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn csv_rows(stdout: &[u8]) -> Vec<Vec<String>> {
    String::from_utf8(stdout.to_vec())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn decompose_bell() {
    let v = json(&["decompose", "--state", "bell"]);
    assert_eq!(v["dims"], serde_json::json!([2, 2]));
    let want = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
    for i in 0..3 {
        assert!(f(&v["r_a"][i]).abs() < 1e-12 && f(&v["r_b"][i]).abs() < 1e-12);
        for j in 0..3 {
            assert!((f(&v["beta"][i][j]) - want[i][j]).abs() < 1e-12);
        }
    }
    assert!((f(&v["norms"]["beta"]) - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn decompose_maximally_mixed_qutrit() {
    let v = json(&["decompose", "--state", "maxmixed:2x3"]);
    assert_eq!(v["dims"], serde_json::json!([2, 3]));
    assert_eq!(v["r_b"].as_array().unwrap().len(), 8);
    assert!(f(&v["norms"]["beta"]).abs() < 1e-14);
}

#[test]
fn state_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.json");
    let h = 0.5;
    let matrix: Vec<[f64; 2]> = (0..16)
        .map(|k| {
            if [0, 3, 12, 15].contains(&k) {
                [h, 0.0]
            } else {
                [0.0, 0.0]
            }
        })
        .collect();
    std::fs::write(
        &path,
        serde_json::json!({"dims": [2, 2], "matrix": matrix}).to_string(),
    )
    .unwrap();
    let v = json(&["dmax", "--state", path.to_str().unwrap()]);
    assert!((f(&v["d"]) - 1.0).abs() < 1e-9);
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"dims\": [2, 2], \"matrix\": [").unwrap();
    let not_psd = dir.path().join("neg.json");
    let matrix: Vec<[f64; 2]> = (0..4)
        .map(|k| {
            if k == 0 {
                [2.0, 0.0]
            } else if k == 3 {
                [-1.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        })
        .collect();
    std::fs::write(
        &not_psd,
        serde_json::json!({"dims": [1, 2], "matrix": matrix}).to_string(),
    )
    .unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["dmax", "--state", broken.to_str().unwrap()],
        vec!["dmax", "--state", not_psd.to_str().unwrap()],
        vec!["dmax", "--state", "missing.json"],
        vec!["dmax", "--state", "nope"],
        vec!["dmax", "--state", "werner:1.5"],
        vec!["scan", "--family", "nope"],
        vec!["scan", "--family", "random", "--count", "0"],
        vec!["dmax", "--state", "bell", "--format", "csv"],
        vec!["dmax", "--state", "bell", "--tol-cyclic", "-1"],
        vec!["chsh", "--state", "maxmixed:2x3", "--phi", "1"],
        vec![
            "chsh",
            "--state",
            "schmidt:0.6",
            "--phi",
            "1",
            "--axis",
            "x",
        ],
        vec!["chsh", "--state", "bell", "--phi", "1", "--axis", "0,0,0"],
    ];
    for args in cases {
        let out = nlshift(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn dmax_examples() {
    let v = json(&["dmax", "--state", "schmidt:0.6"]);
    assert!((f(&v["d"]) - 0.96).abs() < 1e-9);
    assert_eq!(v["method"], "phase-closed-form");
    assert!(f(&v["cross_check_residual"]) < 1e-9);
    let v = json(&["dmax", "--state", "werner:1.0"]);
    assert!((f(&v["d"]) - 1.0).abs() < 1e-9);
    let v = json(&["dmax", "--state", "cc5050"]);
    assert!((f(&v["d"]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    let v = json(&["dmax", "--state", "maxmixed:3x3"]);
    assert!(f(&v["d"]).abs() < 1e-12);
}

#[test]
fn detect_examples() {
    let v = json(&["detect", "--state", "werner:0.8"]);
    assert_eq!(v["bound_violated"], true);
    assert_eq!(v["classification"], "entangled-certified");
    let v = json(&["detect", "--state", "werner:0.5"]);
    assert_eq!(v["bound_violated"], false);
    assert_eq!(v["ppt_negative"], true);
    let v = json(&["detect", "--state", "schmidt:1.0"]);
    assert_eq!(v["classification"], "product-like");
    assert!((f(&v["gisin_Bmax"]) - 2.0).abs() < 1e-9);
    let v = json(&["detect", "--state", "cc5050"]);
    assert_eq!(v["classification"], "classically-correlated-compatible");
    assert!(v["gisin_Bmax"].is_null());
}

#[test]
fn scan_schmidt_grid() {
    let out = nlshift(&["scan", "--family", "schmidt-grid", "--count", "101"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=nlshift.scan.v1"));
    assert_eq!(
        lines.next(),
        Some("index,family,param,d_max,beta_norm,ppt_negative,bound_violated")
    );
    assert!(text
        .lines()
        .last()
        .unwrap()
        .starts_with("# summary: family=schmidt-grid seed=0 count=101"));
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 101);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        let k1: f64 = row[2].parse().unwrap();
        let d: f64 = row[3].parse().unwrap();
        assert!((d - 2.0 * k1 * (1.0 - k1 * k1).sqrt()).abs() < 1e-6);
    }
}

#[test]
fn scan_werner_grid_and_json() {
    let v = json(&[
        "scan",
        "--family",
        "werner-grid",
        "--count",
        "11",
        "--format",
        "json",
    ]);
    assert_eq!(v["schema"], "nlshift.scan.v1");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    for row in rows {
        assert!((f(&row["d_max"]) - f(&row["param"])).abs() < 1e-6);
        assert_eq!(row["ppt_negative"], f(&row["param"]) > 1.0 / 3.0);
    }
    assert!((f(&v["max_d_max"]) - 1.0).abs() < 1e-9);
}

#[test]
fn scan_separable_respects_bound() {
    let out = nlshift(&[
        "scan",
        "--family",
        "separable",
        "--count",
        "200",
        "--seed",
        "5",
    ]);
    assert!(out.status.success());
    for row in csv_rows(&out.stdout) {
        let d: f64 = row[3].parse().unwrap();
        assert!(d <= std::f64::consts::FRAC_1_SQRT_2 + 1e-6);
        assert_eq!(row[5], "false");
        assert_eq!(row[6], "false");
    }
}

#[test]
fn chsh_examples() {
    let v = json(&["chsh", "--state", "bell", "--phi", "3.141592653589793"]);
    assert!((f(&v["estimated_d"]) - 1.0).abs() < 1e-6);
    assert!((f(&v["stage1"]["f_max"]) - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    let v = json(&["chsh", "--state", "bell", "--phi", "0"]);
    assert!(f(&v["estimated_d"]).abs() < 1e-6);
    let v = json(&[
        "chsh",
        "--state",
        "schmidt:0.6",
        "--phi",
        "-3.141592653589793",
        "--axis",
        "z",
    ]);
    assert!((f(&v["estimated_d"]) - 0.96).abs() < 1e-6);
    assert!((f(&v["stage1"]["f_max"]) - f(&v["stage2"]["f_mapped"])).abs() < 1e-6);
}

#[test]
fn env_overrides_and_determinism() {
    let run = |seed_env: Option<&str>, args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nlshift"));
        cmd.args(args).env_remove("NLSHIFT_SEED");
        if let Some(s) = seed_env {
            cmd.env("NLSHIFT_SEED", s);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let args = ["scan", "--family", "random", "--count", "20"];
    let by_env = run(Some("9"), &args);
    let by_flag = run(None, &[&args[..], &["--seed", "9"]].concat());
    assert_eq!(by_env, by_flag);
    assert_ne!(by_env, run(None, &args));
    assert!(String::from_utf8(by_env).unwrap().contains("seed=9"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = nlshift(&[
        "scan",
        "--family",
        "random",
        "--count",
        "20",
        "--seed",
        "9",
        "--workers",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success() && out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), run(Some("9"), &args));
}
