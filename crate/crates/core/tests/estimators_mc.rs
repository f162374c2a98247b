use putraffic_core::bounds::{cr_bounds_known, u_known_lf_limit};
use putraffic_core::rng::{trial_seed, Lane};
use putraffic_core::{
    cr_bounds_joint_uf, cr_bounds_joint_un, generate_samples, run_estimator, EstimateReport, EstimatorId, SamplingPlan,
    SensingModel, TrafficParams,
};

struct Rms {
    value: f64,
    /// standard error of `value`
    se: f64,
}

fn rms_of(sq: &[f64]) -> Rms {
    let k = sq.len() as f64;
    let m = sq.iter().sum::<f64>() / k;
    let var = sq.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (k - 1.0);
    let value = m.sqrt();
    Rms { value, se: (var / k).sqrt() / (2.0 * value) }
}

#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    id: EstimatorId,
    truth: &TrafficParams,
    duration: f64,
    n: usize,
    trials: usize,
    seed: u64,
    pick: impl Fn(&EstimateReport) -> f64,
    target: f64,
) -> Rms {
    let plan = SamplingPlan::uniform(duration, n).unwrap();
    let sq: Vec<f64> = (0..trials)
        .map(|k| {
            let s = generate_samples(truth, &plan, trial_seed(seed, n as u64, k as u64, Lane::Path));
            let est = run_estimator(id, &s, &SensingModel::PERFECT, Some(truth)).unwrap();
            (pick(&est) - target).powi(2)
        })
        .collect();
    rms_of(&sq)
}

fn u_of(e: &EstimateReport) -> f64 {
    e.u_hat
}

fn lf_of(e: &EstimateReport) -> f64 {
    e.lambda_f_hat.unwrap()
}

fn ln_of(e: &EstimateReport) -> f64 {
    e.lambda_n_hat.unwrap()
}

#[test]
fn joint_ml_u_reaches_bound_at_1000_samples() {
    let truth = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let r = monte_carlo(EstimatorId::MlJointF, &truth, 50.0, 1000, 2000, 10, u_of, 0.3);
    let bound = cr_bounds_joint_uf(&truth, 50.0 / 999.0, 1000).unwrap().0.value.sqrt();
    assert!((r.value / bound - 1.0).abs() < 0.10, "rms {} bound {bound}", r.value);
}

#[test]
fn known_lambda_f_example() {
    // At N = 200 the finite-N bound is still 39% above its large-N limit, so
    // the estimator is held to the finite-N bound and must sit above the limit.
    let truth = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let n = 200;
    let r = monte_carlo(EstimatorId::MlKnownLf, &truth, 100.0, n, 2000, 11, u_of, 0.3);
    let finite = cr_bounds_known(&truth, 100.0 / 199.0, n).unwrap().0.value.sqrt();
    let limit = u_known_lf_limit(0.3, 0.9, 100.0).sqrt();
    assert!((r.value / finite - 1.0).abs() < 0.10, "rms {} bound {finite}", r.value);
    assert!(r.value > limit);
}

#[test]
fn known_u_example() {
    let truth = TrafficParams::from_u_lambda_f(0.6, 0.4).unwrap();
    let n = 300;
    let r = monte_carlo(EstimatorId::MlKnownU, &truth, 100.0, n, 2000, 12, lf_of, 0.4);
    let bound = cr_bounds_known(&truth, 100.0 / 299.0, n).unwrap().1.value.sqrt();
    assert!((r.value / bound - 1.0).abs() < 0.15, "rms {} bound {bound}", r.value);
}

#[test]
fn joint_ml_lambda_n_tracks_its_bound() {
    let truth = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let n = 500;
    let r = monte_carlo(EstimatorId::MlJointN, &truth, 50.0, n, 2000, 13, ln_of, truth.lambda_n());
    let bound = cr_bounds_joint_un(&truth, 50.0 / 499.0, n).unwrap().1.value.sqrt();
    assert!((r.value / bound - 1.0).abs() < 0.15, "rms {} bound {bound}", r.value);
}

#[test]
fn joint_ml_rms_non_increasing_in_n() {
    let truth = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let grid = [100usize, 200, 500, 1000];
    for (pick, target) in [(u_of as fn(&EstimateReport) -> f64, 0.3), (lf_of, 0.9)] {
        let rms: Vec<Rms> =
            grid.iter().map(|&n| monte_carlo(EstimatorId::MlJointF, &truth, 50.0, n, 1000, 14, pick, target)).collect();
        for w in rms.windows(2) {
            let slack = 3.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt();
            assert!(w[1].value <= w[0].value + slack, "{} then {}", w[0].value, w[1].value);
        }
    }
}

#[test]
fn averaging_is_unbiased_under_sensing_errors() {
    let truth = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let plan = SamplingPlan::uniform(50.0, 100).unwrap();
    let m = SensingModel::new(0.1, 0.05).unwrap();
    let trials = 20_000;
    let mean = (0..trials)
        .map(|k| {
            let s = generate_samples(&truth, &plan, trial_seed(15, 0, k, Lane::Path));
            let noisy = putraffic_core::apply_sensing_errors(&s, &m, trial_seed(15, 0, k, Lane::Sensing));
            putraffic_core::estimators::averaging_statistic(&noisy, &m).unwrap()
        })
        .sum::<f64>()
        / trials as f64;
    let sd = putraffic_core::mse_avg(&truth, &plan, &m).unwrap().value.sqrt();
    assert!((mean - 0.3).abs() < 3.0 * sd / (trials as f64).sqrt(), "{mean}");
}
