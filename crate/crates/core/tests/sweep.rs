use putraffic_core::experiments::{csv_string, run_sweep, SweepConfig, CSV_COLUMNS};
use putraffic_core::EstimatorId;

const CONFIG: &str = r#"
duration = 50.0
trials = 600
master_seed = 42
estimators = ["avg", "ml-joint-f", "ml-joint-n", "ml-known-lf", "ml-known-u"]

[params]
u = 0.3
lambda_f = 0.9

[axis]
name = "samples"
values = [200, 400]
"#;

#[test]
fn rows_respect_the_bounds() {
    let cfg = SweepConfig::from_toml(CONFIG).unwrap();
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 2 * 5);
    for r in &rows {
        let checks = [(r.rms_u, r.crb_u), (r.rms_lf, r.crb_lf)];
        for (rms, crb) in checks {
            if let (Some(rms), Some(crb)) = (rms, crb) {
                // rms^2 >= 0.95 * bound, with 3 sigma room for 600 trials
                let sigma = (2.0f64 / r.trials as f64).sqrt();
                assert!(rms * rms >= 0.95 * crb * crb * (1.0 - 3.0 * sigma), "{r:?}");
            }
        }
        assert!(r.rms_u.is_none_or(|v| v >= 0.0));
    }
}

#[test]
fn u_axis_and_lambda_axis_sweeps_run() {
    let u_axis = r#"
duration = 100.0
samples = 200
trials = 50
estimators = ["avg", "ml-known-lf"]
[params]
lambda_f = 0.4
[axis]
name = "u"
values = [0.2, 0.5, 0.8]
"#;
    let rows = run_sweep(&SweepConfig::from_toml(u_axis).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.trials == 50));

    let lf_axis = r#"{
  "duration": 100.0, "samples": 300, "trials": 30,
  "estimators": ["ml-known-u"], "params": {"u": 0.6},
  "axis": {"name": "lambda_f", "values": [0.2, 0.4]}
}"#;
    let rows = run_sweep(&SweepConfig::from_json(lf_axis).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.estimator == EstimatorId::MlKnownU && r.rms_u.is_none()));
}

#[test]
fn csv_is_reproducible() {
    let mut cfg = SweepConfig::from_toml(CONFIG).unwrap();
    cfg.trials = Some(100);
    let a = csv_string(&run_sweep(&cfg).unwrap());
    let b = csv_string(&run_sweep(&cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), CSV_COLUMNS.join(","));
    cfg.master_seed += 1;
    assert_ne!(a, csv_string(&run_sweep(&cfg).unwrap()));
}
