use std::fs;
use std::process::{Command, Output};

fn putraffic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_putraffic")).args(args).output().expect("binary runs")
}

const CONFIG: &str = r#"
duration = 20.0
trials = 60
master_seed = 8
estimators = ["avg", "ml-joint-f", "ml-known-u"]

[params]
u = 0.3
lambda_f = 0.9

[axis]
name = "samples"
values = [30, 90]

[[sensing]]
pf = 0.0
pm = 0.0

[[sensing]]
pf = 0.05
pm = 0.05
"#;

#[test]
fn bounds_table() {
    let out = putraffic(&["bounds", "--u", "0.3", "--lambda-f", "0.9", "--duration", "50", "--samples", "1000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("cr_u_joint ")).unwrap();
    let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v / 0.002_768_279 - 1.0).abs() < 1e-6, "{line}");
    assert!(text.contains("cr_u_joint_limit") && text.contains("mse_avg_uniform_limit"));
}

#[test]
fn usage_errors_exit_2() {
    let out = putraffic(&[
        "bounds",
        "--u",
        "0.3",
        "--lambda-f",
        "0.9",
        "--duration",
        "50",
        "--samples",
        "10",
        "--colour",
        "red",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = putraffic(&[
        "bounds",
        "--u",
        "0.3",
        "--lambda-f",
        "0.9",
        "--lambda-n",
        "1",
        "--duration",
        "50",
        "--samples",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(putraffic(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, CONFIG.replace("[30, 90]", "[90, 30]")).unwrap();
    let out = putraffic(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = putraffic(&["sweep", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let csv = dir.path().join(format!("out{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_putraffic"))
            .args(["sweep", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()])
            .env("PUTRAFFIC_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("axis_name,axis_value,estimator,pf,pm,rms_u,rms_lf,rms_ln,crb_u,crb_lf,crb_u_limit,mse_avg_closed_form,trials,boundary_fraction\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn json_config_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"{"duration": 100.0, "samples": 50, "trials": 20, "estimators": ["avg"],
            "params": {"lambda_f": 0.4}, "axis": {"name": "u", "values": [0.2, 0.6]}}"#,
    )
    .unwrap();
    let out = putraffic(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("u,0.200000000,avg,"));
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    let out = putraffic(&[
        "simulate",
        "--u",
        "0.3",
        "--lambda-f",
        "0.9",
        "--duration",
        "50",
        "--samples",
        "500",
        "--seed",
        "4",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for args in [
        vec!["--estimator", "ml-joint-f"],
        vec!["--estimator", "avg"],
        vec!["--estimator", "ml-known-lf", "--lambda-f", "0.9"],
    ] {
        let mut full = vec!["estimate", file.to_str().unwrap()];
        full.extend(args);
        let out = putraffic(&full);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let u = v["u_hat"].as_f64().unwrap();
        assert!((u - 0.3).abs() < 0.2, "{v}");
    }
    let out = putraffic(&["estimate", file.to_str().unwrap(), "--estimator", "ml-known-u"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_small() {
    let out = putraffic(&["verify", "--max-n", "6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    assert_eq!(text.lines().count(), 7);
}
