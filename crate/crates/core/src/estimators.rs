//! Duty-cycle and rate estimators.
//!
//! The maximum-likelihood estimators search in `(logit u, ln lambda)` over a
//! fixed box: `u` in `[U_MIN, 1 - U_MIN]` and rates in
//! `[1e-6 / T, 10 (N - 1) / T]`. With a perfect sensing model they maximize
//! the error-free likelihood; otherwise the forward-filtered noisy one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::likelihood::{loglik_clean_general, loglik_counts, loglik_noisy_forward};
use crate::optim::{maximize_in_box, MaximizeOptions, Maximum};
use crate::traffic::{SampleVector, SensingModel, TrafficParams, TransitionCounts};

/// Smallest duty cycle an estimate may take; the largest is `1 - U_MIN`.
pub const U_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorId {
    /// Bias-corrected sample average of the observed bits.
    Avg,
    /// Joint ML over `(u, lambda_f)`.
    MlJointF,
    /// Joint ML over `(u, lambda_n)`.
    MlJointN,
    /// ML over `u` with `lambda_f` known.
    MlKnownLf,
    /// ML over `lambda_f` with `u` known.
    MlKnownU,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] = [Self::Avg, Self::MlJointF, Self::MlJointN, Self::MlKnownLf, Self::MlKnownU];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Avg => "avg",
            Self::MlJointF => "ml-joint-f",
            Self::MlJointN => "ml-joint-n",
            Self::MlKnownLf => "ml-known-lf",
            Self::MlKnownU => "ml-known-u",
        }
    }

    /// Whether the estimator produces rate estimates.
    pub fn estimates_rates(&self) -> bool {
        !matches!(self, Self::Avg)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            invalid(format!(
                "unknown estimator '{s}' (expected one of avg, ml-joint-f, ml-joint-n, ml-known-lf, ml-known-u)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: EstimatorId,
    pub u_hat: f64,
    pub lambda_f_hat: Option<f64>,
    pub lambda_n_hat: Option<f64>,
    pub loglik_at_opt: Option<f64>,
    pub converged: bool,
    pub boundary_hit: bool,
    pub iterations: usize,
}

/// Unclamped bias-corrected average `(mean - p_f) / (1 - p_f - p_m)`.
pub fn averaging_statistic(samples: &SampleVector, model: &SensingModel) -> Result<f64> {
    let denom = 1.0 - model.p_f - model.p_m;
    if !(denom > 0.0) {
        return Err(domain(format!("p_f + p_m must be below 1, got {}", model.p_f + model.p_m)));
    }
    if samples.is_empty() {
        return Err(domain("need at least one sample"));
    }
    Ok((samples.mean() - model.p_f) / denom)
}

pub fn estimate_avg(samples: &SampleVector, model: &SensingModel) -> Result<EstimateReport> {
    let raw = averaging_statistic(samples, model)?;
    let u_hat = raw.clamp(U_MIN, 1.0 - U_MIN);
    Ok(EstimateReport {
        estimator: EstimatorId::Avg,
        u_hat,
        lambda_f_hat: None,
        lambda_n_hat: None,
        loglik_at_opt: None,
        converged: true,
        boundary_hit: u_hat != raw,
        iterations: 0,
    })
}

/// The search box in natural coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub u_min: f64,
    pub u_max: f64,
    pub rate_min: f64,
    pub rate_max: f64,
}

impl SearchBox {
    pub fn for_samples(samples: &SampleVector) -> Self {
        let t = samples.plan().duration();
        let n = samples.len();
        Self { u_min: U_MIN, u_max: 1.0 - U_MIN, rate_min: 1e-6 / t, rate_max: 10.0 * (n - 1) as f64 / t }
    }

    fn logit_range(&self) -> (f64, f64) {
        (logit(self.u_min), logit(self.u_max))
    }

    fn log_rate_range(&self) -> (f64, f64) {
        (self.rate_min.ln(), self.rate_max.ln())
    }
}

fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Log-likelihood of `samples` as a function of the traffic parameters,
/// choosing the cheapest exact evaluator for the plan and sensing model.
pub struct Objective<'a> {
    samples: &'a SampleVector,
    model: SensingModel,
    uniform: Option<(f64, TransitionCounts)>,
}

impl<'a> Objective<'a> {
    pub fn new(samples: &'a SampleVector, model: &SensingModel) -> Self {
        let uniform = match (model.is_perfect(), samples.plan().uniform_gap()) {
            (true, Some(gap)) if samples.len() >= 2 => {
                Some((gap, TransitionCounts::from_bits(samples.bits()).expect("N >= 2")))
            }
            _ => None,
        };
        Self { samples, model: *model, uniform }
    }

    pub fn eval(&self, params: &TrafficParams) -> f64 {
        if let Some((gap, counts)) = &self.uniform {
            let k = params.kernel(*gap).expect("positive gap");
            return loglik_counts(counts, params, &k).value;
        }
        if self.model.is_perfect() {
            loglik_clean_general(self.samples, params).value
        } else {
            loglik_noisy_forward(self.samples, params, &self.model).value
        }
    }
}

fn check_ml_input(samples: &SampleVector, model: &SensingModel) -> Result<()> {
    if samples.len() < 2 {
        return Err(domain(format!("ML estimation needs at least 2 samples, got {}", samples.len())));
    }
    if model.p_f + model.p_m >= 1.0 {
        return Err(domain("p_f + p_m must be below 1"));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum FreeRate {
    Departure,
    Arrival,
}

fn params_from(u: f64, rate: f64, which: FreeRate) -> Option<TrafficParams> {
    match which {
        FreeRate::Departure => TrafficParams::from_u_lambda_f(u, rate).ok(),
        FreeRate::Arrival => TrafficParams::from_u_lambda_n(u, rate).ok(),
    }
}

fn report(id: EstimatorId, params: &TrafficParams, max: &Maximum) -> EstimateReport {
    EstimateReport {
        estimator: id,
        u_hat: params.u(),
        lambda_f_hat: Some(params.lambda_f()),
        lambda_n_hat: Some(params.lambda_n()),
        loglik_at_opt: Some(max.value),
        converged: max.converged,
        boundary_hit: max.boundary_hit(),
        iterations: max.iterations,
    }
}

fn ml_joint(samples: &SampleVector, model: &SensingModel, which: FreeRate, id: EstimatorId) -> Result<EstimateReport> {
    check_ml_input(samples, model)?;
    let bx = SearchBox::for_samples(samples);
    let objective = Objective::new(samples, model);
    let (ul, uh) = bx.logit_range();
    let (rl, rh) = bx.log_rate_range();
    let f = |x: &[f64]| match params_from(expit(x[0]), x[1].exp(), which) {
        Some(p) => objective.eval(&p),
        None => f64::NEG_INFINITY,
    };
    let max = maximize_in_box(f, &[ul, rl], &[uh, rh], &MaximizeOptions::default());
    let params = params_from(expit(max.x[0]), max.x[1].exp(), which)
        .ok_or_else(|| domain("optimizer returned an invalid point"))?;
    Ok(report(id, &params, &max))
}

/// Joint ML estimate of `(u, lambda_f)`; `lambda_n` follows from the pair.
pub fn estimate_ml_joint_uf(samples: &SampleVector, model: &SensingModel) -> Result<EstimateReport> {
    ml_joint(samples, model, FreeRate::Departure, EstimatorId::MlJointF)
}

/// Joint ML estimate of `(u, lambda_n)`; `lambda_f` follows from the pair.
pub fn estimate_ml_joint_un(samples: &SampleVector, model: &SensingModel) -> Result<EstimateReport> {
    ml_joint(samples, model, FreeRate::Arrival, EstimatorId::MlJointN)
}

/// ML estimate of `u` when `lambda_f` is known.
pub fn estimate_ml_u_known_lf(samples: &SampleVector, lambda_f: f64, model: &SensingModel) -> Result<EstimateReport> {
    check_ml_input(samples, model)?;
    if !(lambda_f.is_finite() && lambda_f > 0.0) {
        return Err(invalid(format!("lambda_f must be positive, got {lambda_f}")));
    }
    let bx = SearchBox::for_samples(samples);
    let objective = Objective::new(samples, model);
    let (ul, uh) = bx.logit_range();
    let f = |x: &[f64]| match TrafficParams::from_u_lambda_f(expit(x[0]), lambda_f) {
        Ok(p) => objective.eval(&p),
        Err(_) => f64::NEG_INFINITY,
    };
    let max = maximize_in_box(f, &[ul], &[uh], &MaximizeOptions::default());
    let params = TrafficParams::from_u_lambda_f(expit(max.x[0]), lambda_f)?;
    Ok(report(EstimatorId::MlKnownLf, &params, &max))
}

/// ML estimate of `lambda_f` when `u` is known.
pub fn estimate_ml_lf_known_u(samples: &SampleVector, u: f64, model: &SensingModel) -> Result<EstimateReport> {
    check_ml_input(samples, model)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(invalid(format!("u must lie in (0, 1), got {u}")));
    }
    let bx = SearchBox::for_samples(samples);
    let objective = Objective::new(samples, model);
    let (rl, rh) = bx.log_rate_range();
    let f = |x: &[f64]| match TrafficParams::from_u_lambda_f(u, x[0].exp()) {
        Ok(p) => objective.eval(&p),
        Err(_) => f64::NEG_INFINITY,
    };
    let max = maximize_in_box(f, &[rl], &[rh], &MaximizeOptions::default());
    let params = TrafficParams::from_u_lambda_f(u, max.x[0].exp())?;
    Ok(report(EstimatorId::MlKnownU, &params, &max))
}

/// Runs estimator `id`. `truth` supplies the known parameter for the
/// known-`lambda_f` and known-`u` estimators.
pub fn run_estimator(
    id: EstimatorId,
    samples: &SampleVector,
    model: &SensingModel,
    truth: Option<&TrafficParams>,
) -> Result<EstimateReport> {
    let need = || truth.ok_or_else(|| invalid(format!("estimator {id} needs the known parameter")));
    match id {
        EstimatorId::Avg => estimate_avg(samples, model),
        EstimatorId::MlJointF => estimate_ml_joint_uf(samples, model),
        EstimatorId::MlJointN => estimate_ml_joint_un(samples, model),
        EstimatorId::MlKnownLf => estimate_ml_u_known_lf(samples, need()?.lambda_f(), model),
        EstimatorId::MlKnownU => estimate_ml_lf_known_u(samples, need()?.u(), model),
    }
}

/// Residuals of the two error-free likelihood equations at `params`, each
/// divided by the sum of the magnitudes of its terms.
///
/// The first is the `lambda_f` equation
/// `n01 + n10 = n00 Pr01 / Pr00 + n11 Pr10 / Pr11`. The second is the `u`
/// equation written as `u` times the derivative of the log-likelihood:
/// `(z1 - u)/(1 - u) = [n01 Pr00 - n00 Pr01][G t lf - Pr01]/(Pr00 Pr01)
/// + [n10 Pr11 - n11 Pr10][(1-u)/u G t lf + Pr01]/(Pr10 Pr11)`.
pub fn stationarity_residuals(counts: &TransitionCounts, params: &TrafficParams, t_c: f64) -> Result<(f64, f64)> {
    let k = params.kernel(t_c)?;
    let [[p00, p01], [p10, p11]] = k.p;
    let (n0, n1, n2, n3) = (counts.n00 as f64, counts.n01 as f64, counts.n10 as f64, counts.n11 as f64);
    let (u, lf) = (params.u(), params.lambda_f());

    let a = n1 + n2;
    let b = n0 * p01 / p00;
    let c = n3 * p10 / p11;
    let rate_residual = (a - b - c) / (a + b + c).max(f64::MIN_POSITIVE);

    let g = k.gamma * t_c * lf;
    let lhs = (counts.z1 as f64 - u) / (1.0 - u);
    let t1 = (n1 * p00 - n0 * p01) * (g - p01) / (p00 * p01);
    let t2 = (n2 * p11 - n3 * p10) * ((1.0 - u) / u * g + p01) / (p10 * p11);
    let scale = lhs.abs()
        + ((n1 * p00).abs() + (n0 * p01).abs()) * (g - p01).abs() / (p00 * p01)
        + ((n2 * p11).abs() + (n3 * p10).abs()) * ((1.0 - u) / u * g + p01).abs() / (p10 * p11);
    let u_residual = (lhs - t1 - t2) / scale.max(f64::MIN_POSITIVE);
    Ok((rate_residual, u_residual))
}
