//! Identity and enumeration checks between independently computed routes.

use rand::Rng;
use serde::Serialize;

use crate::bounds::{
    cr_asymptotes, cr_lf_closed_form, cr_ln_closed_form, cr_u_closed_form, fisher_by_enumeration, fisher_determinant,
    fisher_matrix, i11_two_samples, i12_two_samples, i22_two_samples, mse_avg, mse_avg_by_enumeration,
    mse_avg_recursive_check, u_known_lf_limit, FISHER_ENUMERATION_CAP,
};
use crate::error::Result;
use crate::likelihood::{loglik_clean_general, loglik_noisy_bruteforce, loglik_noisy_forward};
use crate::rng::{derive_seed, rng_from_seed, TrafficRng};
use crate::traffic::{SampleVector, SamplingPlan, SensingModel, TrafficParams};

/// Outcome of one suite: the worst relative error seen over all its checks.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, checks: 0, worst: 0.0, tolerance }
    }

    fn record(&mut self, got: f64, want: f64) {
        let err = rel_err(got, want);
        self.checks += 1;
        if !(err <= self.worst) {
            self.worst = err;
        }
    }

    pub fn passed(&self) -> bool {
        self.checks > 0 && self.worst <= self.tolerance
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn random_params(rng: &mut TrafficRng) -> TrafficParams {
    let u = rng.gen_range(0.05..0.95);
    let lf = 10f64.powf(rng.gen_range(-1.0..0.7));
    TrafficParams::from_u_lambda_f(u, lf).expect("interior point")
}

fn random_gap(rng: &mut TrafficRng) -> f64 {
    10f64.powf(rng.gen_range(-1.3..0.3))
}

/// A random point for the Fisher suite, with the gap chosen through
/// `x = lambda_f t / u` in `[1e-3, 8]`. Beyond that `Gamma` is so small that
/// `I[1,2]` and `I[2,2]` sit ten or more orders below `I[1,1]` and no
/// finite-difference Hessian resolves them to relative precision.
fn random_fisher_point(rng: &mut TrafficRng) -> (TrafficParams, f64) {
    let params = random_params(rng);
    let x = 10f64.powf(rng.gen_range(-3.0..0.9));
    (params, x * params.u() / params.lambda_f())
}

fn all_vectors(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u32..1 << n).map(move |code| (0..n).map(|i| ((code >> i) & 1) as u8).collect())
}

/// Fisher closed forms against enumeration with finite-difference Hessians,
/// plus the two-sample forms.
pub fn fisher_suite(points: usize, max_n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("fisher_enumeration", 1e-5);
    let mut rng = rng_from_seed(derive_seed(seed, &[1]));
    for _ in 0..points {
        let (params, t) = random_fisher_point(&mut rng);
        for n in 2..=max_n.min(FISHER_ENUMERATION_CAP) {
            let closed = fisher_matrix(&params, t, n)?;
            let oracle = fisher_by_enumeration(&params, t, n)?;
            rep.record(closed.i11, oracle.i11);
            rep.record(closed.i12, oracle.i12);
            rep.record(closed.i22, oracle.i22);
            if n == 2 {
                rep.record(i11_two_samples(&params, t)?, oracle.i11);
                rep.record(i12_two_samples(&params, t)?, oracle.i12);
                rep.record(i22_two_samples(&params, t)?, oracle.i22);
            }
        }
    }
    Ok(rep)
}

/// The parameter grid used by [`bound_route_suite`]: 100 points.
pub fn bound_grid() -> Vec<(TrafficParams, f64, usize)> {
    let mut grid = Vec::new();
    for u in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for lf in [0.2, 0.9, 2.0, 5.0] {
            for (t, n) in [(0.01, 1000), (0.1, 2), (0.25, 200), (1.0, 10), (2.0, 50)] {
                grid.push((TrafficParams::from_u_lambda_f(u, lf).expect("grid point"), t, n));
            }
        }
    }
    grid
}

/// Determinant and bound closed forms against the inverse Fisher matrix.
pub fn bound_route_suite() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("bound_routes", 1e-8);
    for (params, t, n) in bound_grid() {
        let f = fisher_matrix(&params, t, n)?;
        rep.record(fisher_determinant(&params, t, n)?, f.determinant());
        let (vu, vlf) = f.inverse_diagonal()?;
        rep.record(cr_u_closed_form(&params, t, n)?, vu);
        rep.record(cr_lf_closed_form(&params, t, n)?, vlf);
        rep.record(cr_ln_closed_form(&params, t, n)?, f.lambda_n_bound(&params)?);
    }
    Ok(rep)
}

/// Clean and noisy likelihoods each sum to one over every observation vector.
pub fn normalization_suite(max_n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("likelihood_normalization", 1e-10);
    let mut rng = rng_from_seed(derive_seed(seed, &[3]));
    for n in 1..=max_n.min(10) {
        for _ in 0..3 {
            let params = random_params(&mut rng);
            let plan = if n > 1 && rng.gen_bool(0.5) {
                SamplingPlan::from_gaps((1..n).map(|_| random_gap(&mut rng)).collect())?
            } else {
                SamplingPlan::uniform(random_gap(&mut rng) * n as f64, n.max(2))?.prefix(n)
            };
            let model = SensingModel::new(rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3))?;
            let (mut clean, mut noisy) = (0.0, 0.0);
            for bits in all_vectors(n) {
                let sv = SampleVector::new(bits, plan.clone())?;
                clean += loglik_clean_general(&sv, &params).prob();
                noisy += loglik_noisy_forward(&sv, &params, &model).prob();
            }
            rep.record(clean, 1.0);
            rep.record(noisy, 1.0);
        }
    }
    Ok(rep)
}

/// Forward-filtered noisy likelihood against the sum over hidden vectors.
pub fn forward_suite(cases: usize, max_n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("forward_vs_bruteforce", 1e-10);
    let mut rng = rng_from_seed(derive_seed(seed, &[4]));
    let max_n = max_n.clamp(1, 12);
    for _ in 0..cases {
        let n = rng.gen_range(1..=max_n);
        let params = random_params(&mut rng);
        let plan = if n > 1 && rng.gen_bool(0.5) {
            SamplingPlan::from_gaps((1..n).map(|_| random_gap(&mut rng)).collect())?
        } else {
            SamplingPlan::uniform(random_gap(&mut rng) * n as f64, n.max(2))?.prefix(n)
        };
        let model = SensingModel::new(rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3))?;
        let bits = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
        let sv = SampleVector::new(bits, plan)?;
        let fwd = loglik_noisy_forward(&sv, &params, &model);
        let brute = loglik_noisy_bruteforce(&sv, &params, &model)?;
        // relative error of the likelihood itself
        rep.record((fwd.value - brute.value).exp_m1() + 1.0, 1.0);
    }
    Ok(rep)
}

fn mse_cases(rng: &mut TrafficRng, n: usize) -> Result<Vec<(TrafficParams, SamplingPlan, SensingModel)>> {
    let mut out = Vec::new();
    for k in 0..2 {
        let params = random_params(rng);
        let plan = if k == 0 {
            SamplingPlan::uniform(random_gap(rng) * (n - 1) as f64, n)?
        } else {
            SamplingPlan::from_gaps((1..n).map(|_| random_gap(rng)).collect())?
        };
        for model in [SensingModel::PERFECT, SensingModel::new(rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.2))?] {
            out.push((params, plan.clone(), model));
        }
    }
    Ok(out)
}

/// The averaging MSE closed form against direct enumeration of observations.
pub fn mse_enumeration_suite(max_n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("mse_avg_enumeration", 1e-10);
    let mut rng = rng_from_seed(derive_seed(seed, &[5]));
    for n in 2..=max_n.min(10) {
        for (params, plan, model) in mse_cases(&mut rng, n)? {
            rep.record(mse_avg(&params, &plan, &model)?.value, mse_avg_by_enumeration(&params, &plan, &model)?.value);
        }
    }
    Ok(rep)
}

/// The averaging MSE closed form against its sample-by-sample recursion.
pub fn mse_recursion_suite(max_n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("mse_avg_recursion", 1e-10);
    let mut rng = rng_from_seed(derive_seed(seed, &[6]));
    for n in 2..=max_n.min(100) {
        for (params, plan, model) in mse_cases(&mut rng, n)? {
            rep.record(mse_avg_recursive_check(&params, &plan, &model)?.value, mse_avg(&params, &plan, &model)?.value);
        }
    }
    Ok(rep)
}

/// Knowing `lambda_f` gives the same limiting `u` bound as joint estimation
/// over twice the window.
pub fn doubling_suite(points: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("known_rate_doubling", 4.0 * f64::EPSILON);
    let mut rng = rng_from_seed(derive_seed(seed, &[7]));
    for _ in 0..points {
        let params = random_params(&mut rng);
        let t = 10f64.powf(rng.gen_range(-1.0..3.0));
        let joint_double = cr_asymptotes(&params, 2.0 * t)?[0].value;
        rep.record(u_known_lf_limit(params.u(), params.lambda_f(), t), joint_double);
    }
    Ok(rep)
}

/// Every suite, sized by `max_n`.
pub fn run_all(max_n: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        fisher_suite(50, max_n, seed)?,
        bound_route_suite()?,
        normalization_suite(max_n, seed)?,
        forward_suite(200, max_n, seed)?,
        mse_enumeration_suite(max_n, seed)?,
        mse_recursion_suite(max_n.max(100), seed)?,
        doubling_suite(200, seed)?,
    ])
}
