//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::cell::OnceCell;
use std::process::ExitCode;
use std::time::Instant;

use putraffic_core::estimators::averaging_statistic;
use putraffic_core::experiments::{csv_string, run_sweep, verify, SuiteReport, SweepConfig, SweepResultRow};
use putraffic_core::rng::{trial_seed, Lane};
use putraffic_core::{
    apply_sensing_errors, cr_asymptotes, cr_bounds_joint_uf, cr_bounds_joint_un, generate_samples, mse_avg,
    mse_avg_uniform_limit, EstimatorId, SamplingPlan, SensingModel, TrafficParams,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn suites(reports: &[SuiteReport]) -> Outcome {
    let pass = reports.iter().all(SuiteReport::passed);
    let detail = reports
        .iter()
        .map(|r| format!("{} {} checks worst {:.1e} (tol {:.0e})", r.name, r.checks, r.worst, r.tolerance))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn fig1() -> TrafficParams {
    TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap()
}

fn criterion_1() -> Outcome {
    suites(&[verify::fisher_suite(50, 8, 101).unwrap()])
}

fn criterion_2() -> Outcome {
    suites(&[verify::bound_route_suite().unwrap()])
}

fn criterion_3() -> Outcome {
    suites(&[verify::normalization_suite(10, 103).unwrap(), verify::forward_suite(200, 12, 103).unwrap()])
}

/// Averaging-estimator MSE by simulation, with its standard error.
fn simulated_avg_mse(n: usize, model: &SensingModel, trials: u64, seed: u64) -> (f64, f64) {
    let plan = SamplingPlan::uniform(50.0, n).unwrap();
    let sq: Vec<f64> = (0..trials)
        .map(|k| {
            let clean = generate_samples(&fig1(), &plan, trial_seed(seed, 0, k, Lane::Path));
            let obs = apply_sensing_errors(&clean, model, trial_seed(seed, 0, k, Lane::Sensing));
            (averaging_statistic(&obs, model).unwrap() - 0.3).powi(2)
        })
        .collect();
    let k = trials as f64;
    let m = sq.iter().sum::<f64>() / k;
    let var = sq.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

fn criterion_4() -> Outcome {
    let mut out =
        suites(&[verify::mse_enumeration_suite(10, 104).unwrap(), verify::mse_recursion_suite(100, 104).unwrap()]);
    let plan = SamplingPlan::uniform(50.0, 100).unwrap();
    for model in [SensingModel::PERFECT, SensingModel::new(0.05, 0.05).unwrap()] {
        let closed = mse_avg(&fig1(), &plan, &model).unwrap().value;
        let (mc, se) = simulated_avg_mse(100, &model, 100_000, 104);
        let z = (mc - closed) / se;
        out.pass &= z.abs() < 3.0;
        out.detail += &format!("; MC at pf=pm={}: {mc:.6e} vs {closed:.6e} (z = {z:.2})", model.p_f);
    }
    out
}

fn criterion_5() -> Outcome {
    let a = cr_asymptotes(&fig1(), 50.0).unwrap();
    let avg_limit = mse_avg_uniform_limit(&fig1(), 50.0).unwrap().value;
    let close = |x: f64, want: f64, digits: f64| (x - want).abs() <= 0.5 * 10f64.powf(-digits);
    let mut pass = close(a[0].value, 0.002_763_16, 8.0)
        && close(a[1].value, 0.025_545_1, 7.0)
        && close(avg_limit, 0.002_781_33, 8.0);

    let n = 100_000;
    let t_c = 50.0 / (n - 1) as f64;
    let (vu, vlf) = cr_bounds_joint_uf(&fig1(), t_c, n).unwrap();
    let (_, vln) = cr_bounds_joint_un(&fig1(), t_c, n).unwrap();
    let vavg = mse_avg(&fig1(), &SamplingPlan::uniform(50.0, n).unwrap(), &SensingModel::PERFECT).unwrap().value;
    let rel = [
        vu.value / a[0].value - 1.0,
        vlf.value / a[1].value - 1.0,
        vln.value / a[2].value - 1.0,
        vavg / avg_limit - 1.0,
    ];
    pass &= rel.iter().all(|r| r.abs() < 0.01);

    let doubling = verify::doubling_suite(200, 105).unwrap();
    pass &= doubling.passed();
    Outcome {
        pass,
        detail: format!(
            "limits u {:.8} lf {:.7} avg {:.8}; N=1e5 rel gaps u {:.1e} lf {:.1e} ln {:.1e} avg {:.1e}; doubling worst {:.1e}",
            a[0].value, a[1].value, avg_limit, rel[0], rel[1], rel[2], rel[3], doubling.worst
        ),
    }
}

fn sweep(text: &str) -> Vec<SweepResultRow> {
    run_sweep(&SweepConfig::from_toml(text).unwrap()).unwrap()
}

fn row(rows: &[SweepResultRow], n: f64, id: EstimatorId) -> &SweepResultRow {
    rows.iter().find(|r| r.axis_value == n && r.estimator == id).unwrap()
}

/// Standard error of an RMS estimate from `trials` draws of roughly Gaussian errors.
fn rms_se(rms: f64, trials: usize) -> f64 {
    rms / (2.0 * trials as f64).sqrt()
}

const FIG1_PERFECT: &str = r#"
duration = 50.0
trials = 2000
master_seed = 106
estimators = ["avg", "ml-joint-f", "ml-known-u"]
[params]
u = 0.3
lambda_f = 0.9
[axis]
name = "samples"
values = [200, 500, 1000]
"#;

fn criterion_6(rows: &[SweepResultRow]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [200.0, 500.0, 1000.0] {
        let ml = row(rows, n, EstimatorId::MlJointF);
        let avg = row(rows, n, EstimatorId::Avg);
        let r_ml = ml.rms_u.unwrap() / ml.crb_u.unwrap();
        let r_avg = avg.rms_u.unwrap() / avg.mse_avg_closed_form.unwrap();
        pass &= (r_ml - 1.0).abs() < 0.10 && (r_avg - 1.0).abs() < 0.10;
        detail.push(format!("N={n}: ml/crb {r_ml:.3}, avg/closed {r_avg:.3}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_7() -> Outcome {
    let grid = "[50, 100, 200, 500, 1000]";
    let paired = sweep(&format!(
        r#"
duration = 50.0
trials = 2000
master_seed = 107
estimators = ["avg", "ml-joint-f"]
[params]
u = 0.3
lambda_f = 0.9
[axis]
name = "samples"
values = {grid}
[[sensing]]
pf = 0.05
pm = 0.05
"#
    ));
    let avg_only = sweep(&format!(
        r#"
duration = 50.0
master_seed = 108
estimators = ["avg"]
[params]
u = 0.3
lambda_f = 0.9
[axis]
name = "samples"
values = {grid}
[[sensing]]
pf = 0.05
pm = 0.05
"#
    ));
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [50.0, 100.0, 200.0, 500.0, 1000.0] {
        let ml = row(&paired, n, EstimatorId::MlJointF).rms_u.unwrap();
        let avg = row(&paired, n, EstimatorId::Avg).rms_u.unwrap();
        let big = row(&avg_only, n, EstimatorId::Avg);
        let vs_closed = big.rms_u.unwrap() / big.mse_avg_closed_form.unwrap();
        pass &= (ml / avg - 1.0).abs() < 0.10 && (vs_closed - 1.0).abs() < 0.05;
        detail.push(format!("N={n}: ml/avg {:.3}, avg/closed {vs_closed:.4} ({} trials)", ml / avg, big.trials));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_8(rows: &[SweepResultRow]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [200.0, 500.0] {
        let joint = row(rows, n, EstimatorId::MlJointF);
        let known = row(rows, n, EstimatorId::MlKnownU);
        let (j, k) = (joint.rms_lf.unwrap(), known.rms_lf.unwrap());
        let ratio = j / joint.crb_lf.unwrap();
        let sigma = (rms_se(j, joint.trials).powi(2) + rms_se(k, known.trials).powi(2)).sqrt();
        pass &= (ratio - 1.0).abs() < 0.15 && j - k > 3.0 * sigma;
        detail.push(format!(
            "N={n}: joint/crb {ratio:.3}, known-u {k:.4} vs joint {j:.4} ({:.1} sigma)",
            (j - k) / sigma
        ));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_9() -> Outcome {
    let text = r#"
duration = 30.0
trials = 150
master_seed = 109
estimators = ["avg", "ml-joint-f", "ml-known-lf", "ml-known-u"]
[params]
u = 0.4
lambda_n = 1.2
[axis]
name = "samples"
values = [40, 120]
[[sensing]]
pf = 0.0
pm = 0.0
[[sensing]]
pf = 0.05
pm = 0.1
"#;
    let cfg = SweepConfig::from_toml(text).unwrap();
    let runs: Vec<String> = [1usize, 2, 1]
        .iter()
        .map(|&threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| csv_string(&run_sweep(&cfg).unwrap()))
        })
        .collect();
    let pass = runs.windows(2).all(|w| w[0] == w[1]);
    Outcome { pass, detail: format!("3 runs (1, 2, 1 threads), {} bytes each, identical: {pass}", runs[0].len()) }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |index: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {index} [{name}]: {status} in {:.1?}: {}", start.elapsed(), o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report(1, "Fisher closed forms vs enumeration", &mut criterion_1);
    report(2, "determinant and bound routes", &mut criterion_2);
    report(3, "likelihood normalization and forward recursion", &mut criterion_3);
    report(4, "averaging MSE: closed form, enumeration, recursion, Monte Carlo", &mut criterion_4);
    report(5, "asymptotes, convergence, doubling", &mut criterion_5);
    // criteria 6 and 8 share one sweep; it runs (and is timed) under 6
    let fig1_rows = OnceCell::new();
    report(6, "u estimation error, perfect sensing", &mut || {
        criterion_6(fig1_rows.get_or_init(|| sweep(FIG1_PERFECT)))
    });
    report(7, "u estimation error under sensing errors", &mut criterion_7);
    report(8, "lambda_f estimation error, perfect sensing", &mut || {
        criterion_8(fig1_rows.get_or_init(|| sweep(FIG1_PERFECT)))
    });
    report(9, "sweep determinism", &mut criterion_9);
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
