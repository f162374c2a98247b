//! Fisher information, Cramér-Rao bounds and the mean squared error of the
//! averaging estimator.
//!
//! Every closed form here has a second, independent route used to check it:
//! Fisher elements against an enumeration over all sample vectors with
//! finite-difference Hessians, bounds against the inverse Fisher matrix, and
//! the averaging MSE against its sample-by-sample recursion and against
//! direct enumeration of observation vectors.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::likelihood::{loglik_clean_general, loglik_noisy_forward, ENUMERATION_CAP};
use crate::traffic::{SampleVector, SamplingPlan, SensingModel, TrafficParams};

/// Largest `N` accepted by [`fisher_by_enumeration`].
pub const FISHER_ENUMERATION_CAP: usize = 8;

/// Relative step of the finite-difference Hessian in the enumeration oracle.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

/// Tolerance above which the closed-form bounds defer to the matrix route.
const ROUTE_TOLERANCE: f64 = 1e-8;

/// 2x2 Fisher information in `(u, lambda_f)` for `n` uniformly spaced samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub i11: f64,
    pub i12: f64,
    pub i22: f64,
    pub n: usize,
    pub t_c: f64,
}

impl FisherInfo {
    pub fn determinant(&self) -> f64 {
        self.i11 * self.i22 - self.i12 * self.i12
    }

    /// `(V_u, V_lf)`: diagonal of the inverse.
    pub fn inverse_diagonal(&self) -> Result<(f64, f64)> {
        let det = self.determinant();
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::DegenerateInformation(format!("determinant {det}")));
        }
        Ok((self.i22 / det, self.i11 / det))
    }

    /// Inverse of the matrix as `[[a, b], [b, c]]`.
    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let det = self.determinant();
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::DegenerateInformation(format!("determinant {det}")));
        }
        Ok([[self.i22 / det, -self.i12 / det], [-self.i12 / det, self.i11 / det]])
    }

    /// Variance bound of `lambda_n = lambda_f (1 - u) / u` by the delta method.
    pub fn lambda_n_bound(&self, params: &TrafficParams) -> Result<f64> {
        let inv = self.inverse()?;
        let (u, lf) = (params.u(), params.lambda_f());
        let g = [-lf / (u * u), (1.0 - u) / u];
        Ok(g[0] * g[0] * inv[0][0] + 2.0 * g[0] * g[1] * inv[0][1] + g[1] * g[1] * inv[1][1])
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        let scale = self.i11.abs() * self.i22.abs() + self.i12 * self.i12;
        self.i11 >= 0.0 && self.i22 >= 0.0 && self.determinant() >= -1e-9 * scale.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    CrUJoint,
    CrLfJoint,
    CrLnJoint,
    CrUJointLimit,
    CrLfLimit,
    CrLnLimit,
    CrUKnownLfLimit,
    /// Finite-`N` bound on `u` when `lambda_f` is known, `1 / I[1,1]`.
    CrUKnownLf,
    /// Finite-`N` bound on `lambda_f` when `u` is known, `1 / I[2,2]`.
    CrLfKnownU,
    MseAvg,
    MseAvgUniform,
    MseAvgUniformLimit,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CrUJoint => "cr_u_joint",
            Self::CrLfJoint => "cr_lf_joint",
            Self::CrLnJoint => "cr_ln_joint",
            Self::CrUJointLimit => "cr_u_joint_limit",
            Self::CrLfLimit => "cr_lf_limit",
            Self::CrLnLimit => "cr_ln_limit",
            Self::CrUKnownLfLimit => "cr_u_known_lf_limit",
            Self::CrUKnownLf => "cr_u_known_lf",
            Self::CrLfKnownU => "cr_lf_known_u",
            Self::MseAvg => "mse_avg",
            Self::MseAvgUniform => "mse_avg_uniform",
            Self::MseAvgUniformLimit => "mse_avg_uniform_limit",
        }
    }
}

/// A mean squared error bound or value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
}

impl BoundReport {
    fn new(kind: BoundKind, value: f64) -> Self {
        Self { kind, value }
    }

    pub fn rms(&self) -> f64 {
        self.value.sqrt()
    }
}

/// Shorthand for the quantities shared by the closed forms.
struct Terms {
    u: f64,
    lf: f64,
    t: f64,
    n: f64,
    gamma: f64,
    /// `1 - gamma`, computed without cancellation
    omg: f64,
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
}

impl Terms {
    fn new(params: &TrafficParams, t_c: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("need at least 2 samples, got {n}")));
        }
        if !(t_c > 0.0 && t_c.is_finite()) {
            return Err(domain(format!("sampling gap must be positive, got {t_c}")));
        }
        let k = params.kernel(t_c)?;
        let x = params.lambda_f() * t_c / params.u();
        Ok(Self {
            u: params.u(),
            lf: params.lambda_f(),
            t: t_c,
            n: n as f64,
            gamma: k.gamma,
            omg: -(-x).exp_m1(),
            p00: k.p[0][0],
            p01: k.p[0][1],
            p10: k.p[1][0],
            p11: k.p[1][1],
        })
    }

    /// `(N-1) G^2 - N G`, rearranged to avoid cancelling two `O(N)` terms.
    fn quad(&self) -> f64 {
        -self.gamma * (1.0 + (self.n - 1.0) * self.omg)
    }

    /// `u Pr10 ((3N-2) G - N) + (N-1) G^2 - N G`
    fn bracket(&self) -> f64 {
        self.u * self.p10 * ((3.0 * self.n - 2.0) * self.gamma - self.n) + self.quad()
    }

    /// `2 G + N (1 - G)`
    fn spread(&self) -> f64 {
        2.0 * self.gamma + self.n * self.omg
    }
}

/// Closed-form Fisher information for `n` samples `t_c` apart.
pub fn fisher_matrix(params: &TrafficParams, t_c: f64, n: usize) -> Result<FisherInfo> {
    let s = Terms::new(params, t_c, n)?;
    let (u, lf, t, nn, g) = (s.u, s.lf, s.t, s.n, s.gamma);
    let ppp = s.p01 * s.p00 * s.p11;
    let i11 = g * g * lf * t * (nn - 1.0) * (lf * t * (1.0 - u) * (1.0 + g) + 2.0 * u * (2.0 * u - 1.0) * s.omg)
        / (u * u * ppp)
        - s.bracket() / (u * (1.0 - u) * s.p00 * s.p11);
    let i12 = -(nn - 1.0) * g * g * t * (t * lf * (1.0 - u) * (1.0 + g) + s.p01 * (2.0 * u - 1.0)) / (u * ppp);
    let i22 = (nn - 1.0) * g * g * t * t * (1.0 - u) * (1.0 + g) / ppp;
    Ok(FisherInfo { i11, i12, i22, n, t_c })
}

/// Closed-form determinant of the Fisher matrix.
pub fn fisher_determinant(params: &TrafficParams, t_c: f64, n: usize) -> Result<f64> {
    let s = Terms::new(params, t_c, n)?;
    let gt = s.gamma * s.t;
    Ok(gt * gt * (s.n - 1.0) * s.spread() / (s.u * s.p01 * s.p00 * s.p11))
}

/// `E[-d^2/du^2 log L]` for two samples, written out term by term.
pub fn i11_two_samples(params: &TrafficParams, t_c: f64) -> Result<f64> {
    let s = Terms::new(params, t_c, 2)?;
    let (u, lf, t, g) = (s.u, s.lf, s.t, s.gamma);
    Ok((lf * t * (1.0 - u) * (1.0 + g) + (4.0 * u * u - 2.0 * u) * s.omg) / (u * u * s.p01 * s.p00 * s.p11)
        * g
        * g
        * lf
        * t
        - (2.0 * s.p10 * u * (2.0 * g - 1.0) + g * (g - 2.0)) / (u * (1.0 - u) * s.p00 * s.p11))
}

/// `E[-d^2/du dlambda_f log L]` for two samples.
pub fn i12_two_samples(params: &TrafficParams, t_c: f64) -> Result<f64> {
    let s = Terms::new(params, t_c, 2)?;
    let (u, lf, t, g) = (s.u, s.lf, s.t, s.gamma);
    Ok(t * g * g * (s.p01 * (1.0 - 2.0 * u) - t * lf * (1.0 - u) * (1.0 + g)) / (u * s.p01 * s.p11 * s.p00))
}

/// `E[-d^2/dlambda_f^2 log L]` for two samples.
pub fn i22_two_samples(params: &TrafficParams, t_c: f64) -> Result<f64> {
    let s = Terms::new(params, t_c, 2)?;
    Ok(s.gamma * s.gamma * s.t * s.t * (1.0 - s.u) * (1.0 + s.gamma) / (s.p01 * s.p00 * s.p11))
}

/// `ln(p_new / p_old)` for each transition probability and for the first
/// sample, evaluated from exact increments so that differences of order
/// `1e-5` keep full relative precision.
struct LogIncrements {
    first: [f64; 2],
    trans: [[f64; 2]; 2],
}

fn log_increments(u: f64, lf: f64, du: f64, dlf: f64, t: f64) -> LogIncrements {
    let u2 = u + du;
    let x = lf * t / u;
    let x2 = (lf + dlf) * t / u2;
    // x2 - x = t (dlf u - lf du) / (u u2)
    let dx = t * (dlf * u - lf * du) / (u * u2);
    let gamma = (-x).exp();
    let omg = -(-x).exp_m1();
    let omg2 = -(-x2).exp_m1();
    // gamma2 - gamma
    let dgamma = gamma * (-dx).exp_m1();

    let p01 = u * omg;
    let p10 = (1.0 - u) * omg;
    let p00 = 1.0 - p01;
    let p11 = 1.0 - p10;
    let d01 = du * omg2 - u * dgamma;
    let d10 = -du * omg2 - (1.0 - u) * dgamma;
    LogIncrements {
        first: [(-du / (1.0 - u)).ln_1p(), (du / u).ln_1p()],
        trans: [[(-d01 / p00).ln_1p(), (d01 / p01).ln_1p()], [(d10 / p10).ln_1p(), (-d10 / p11).ln_1p()]],
    }
}

/// Expected negative Hessian of the log-likelihood over all `2^n` vectors,
/// by central differences with steps `h * u` and `h * lambda_f`.
fn expected_fd_hessian(params: &TrafficParams, plan: &SamplingPlan, h: f64) -> Result<[f64; 3]> {
    let n = plan.len();
    let t_c = plan.uniform_gap().expect("uniform plan");
    let (u, lf) = (params.u(), params.lambda_f());
    let hu = h * u;
    let hl = h * lf;

    let pu = log_increments(u, lf, hu, 0.0, t_c);
    let mu = log_increments(u, lf, -hu, 0.0, t_c);
    let pl = log_increments(u, lf, 0.0, hl, t_c);
    let ml = log_increments(u, lf, 0.0, -hl, t_c);
    // the mixed stencil as two lambda_f steps taken at u + hu and u - hu,
    // so the large u-gradient never has to cancel
    let up = log_increments(u + hu, lf - hl, 0.0, 2.0 * hl, t_c);
    let down = log_increments(u - hu, lf - hl, 0.0, 2.0 * hl, t_c);
    let delta = |inc: &LogIncrements, bits: &[u8]| -> f64 {
        inc.first[bits[0] as usize] + bits.windows(2).map(|w| inc.trans[w[0] as usize][w[1] as usize]).sum::<f64>()
    };

    let mut acc = [0.0; 3];
    for code in 0u32..1 << n {
        let bits: Vec<u8> = (0..n).map(|i| ((code >> (n - 1 - i)) & 1) as u8).collect();
        let p = loglik_clean_general(&SampleVector::new(bits.clone(), plan.clone())?, params).prob();
        acc[0] -= p * (delta(&pu, &bits) + delta(&mu, &bits)) / (hu * hu);
        acc[1] -= p * (delta(&up, &bits) - delta(&down, &bits)) / (4.0 * hu * hl);
        acc[2] -= p * (delta(&pl, &bits) + delta(&ml, &bits)) / (hl * hl);
    }
    Ok(acc)
}

/// Fisher information by enumerating all `2^n` sample vectors, weighting each
/// by its probability, and differentiating its log-likelihood numerically.
///
/// Central differences of relative step [`FD_RELATIVE_STEP`] and half that
/// are combined by one Richardson step. Without it the `h^2` error would
/// swamp `I[1,2]` when it is many orders smaller than the diagonal, which
/// happens once `lambda_f t_c / u` is large.
pub fn fisher_by_enumeration(params: &TrafficParams, t_c: f64, n: usize) -> Result<FisherInfo> {
    if n > FISHER_ENUMERATION_CAP {
        return Err(Error::Capacity { n, cap: FISHER_ENUMERATION_CAP });
    }
    if n < 2 {
        return Err(domain(format!("need at least 2 samples, got {n}")));
    }
    let plan = SamplingPlan::uniform(t_c * (n - 1) as f64, n)?;
    let coarse = expected_fd_hessian(params, &plan, FD_RELATIVE_STEP)?;
    let fine = expected_fd_hessian(params, &plan, FD_RELATIVE_STEP / 2.0)?;
    let r = |k: usize| (4.0 * fine[k] - coarse[k]) / 3.0;
    Ok(FisherInfo { i11: r(0), i12: r(1), i22: r(2), n, t_c })
}

/// Closed-form bound on `u` under joint estimation.
pub fn cr_u_closed_form(params: &TrafficParams, t_c: f64, n: usize) -> Result<f64> {
    let s = Terms::new(params, t_c, n)?;
    Ok(s.u * (1.0 - s.u) * (1.0 + s.gamma) / s.spread())
}

/// Closed-form bound on `lambda_f` under joint estimation of `(u, lambda_f)`.
pub fn cr_lf_closed_form(params: &TrafficParams, t_c: f64, n: usize) -> Result<f64> {
    let s = Terms::new(params, t_c, n)?;
    let (u, lf, t, nn, g) = (s.u, s.lf, s.t, s.n, s.gamma);
    let gt = g * t;
    Ok(lf * (lf * t * (1.0 - u) * (1.0 + g) + 2.0 * u * (2.0 * u - 1.0) * s.omg) / (u * t * s.spread())
        - s.p01 * s.bracket() / (gt * gt * (1.0 - u) * (nn - 1.0) * s.spread()))
}

/// Closed-form bound on `lambda_n` under joint estimation of `(u, lambda_n)`.
pub fn cr_ln_closed_form(params: &TrafficParams, t_c: f64, n: usize) -> Result<f64> {
    let s = Terms::new(params, t_c, n)?;
    let (u, t, nn, g) = (s.u, s.t, s.n, s.gamma);
    let ln = params.lambda_n();
    let gt = g * t;
    Ok(ln * (ln * t * u * (1.0 + g) + 2.0 * (1.0 - u) * (1.0 - 2.0 * u) * s.omg) / ((1.0 - u) * t * s.spread())
        - s.p10 * s.bracket() / (gt * gt * u * (nn - 1.0) * s.spread()))
}

fn prefer_matrix_route(kind: BoundKind, closed: f64, matrix: f64) -> f64 {
    let rel = (closed - matrix).abs() / matrix.abs().max(f64::MIN_POSITIVE);
    if rel > ROUTE_TOLERANCE || !closed.is_finite() {
        log::warn!(
            "{}: closed form {closed:e} disagrees with the inverse Fisher matrix {matrix:e} (rel {rel:e}); using the matrix value",
            kind.as_str()
        );
        matrix
    } else {
        closed
    }
}

/// Bounds on `u` and `lambda_f` for joint estimation of `(u, lambda_f)`.
pub fn cr_bounds_joint_uf(params: &TrafficParams, t_c: f64, n: usize) -> Result<(BoundReport, BoundReport)> {
    let (mu, mlf) = fisher_matrix(params, t_c, n)?.inverse_diagonal()?;
    let vu = prefer_matrix_route(BoundKind::CrUJoint, cr_u_closed_form(params, t_c, n)?, mu);
    let vlf = prefer_matrix_route(BoundKind::CrLfJoint, cr_lf_closed_form(params, t_c, n)?, mlf);
    Ok((BoundReport::new(BoundKind::CrUJoint, vu), BoundReport::new(BoundKind::CrLfJoint, vlf)))
}

/// Bounds on `u` and `lambda_n` for joint estimation of `(u, lambda_n)`. The
/// `u` bound is the same as under `(u, lambda_f)` parameterization.
pub fn cr_bounds_joint_un(params: &TrafficParams, t_c: f64, n: usize) -> Result<(BoundReport, BoundReport)> {
    let fisher = fisher_matrix(params, t_c, n)?;
    let (mu, _) = fisher.inverse_diagonal()?;
    let mln = fisher.lambda_n_bound(params)?;
    let vu = prefer_matrix_route(BoundKind::CrUJoint, cr_u_closed_form(params, t_c, n)?, mu);
    let vln = prefer_matrix_route(BoundKind::CrLnJoint, cr_ln_closed_form(params, t_c, n)?, mln);
    Ok((BoundReport::new(BoundKind::CrUJoint, vu), BoundReport::new(BoundKind::CrLnJoint, vln)))
}

/// Single-parameter bounds: `u` with `lambda_f` known, and `lambda_f` with `u` known.
pub fn cr_bounds_known(params: &TrafficParams, t_c: f64, n: usize) -> Result<(BoundReport, BoundReport)> {
    let f = fisher_matrix(params, t_c, n)?;
    if !(f.i11 > 0.0 && f.i22 > 0.0) {
        return Err(Error::DegenerateInformation(format!("diagonal ({}, {})", f.i11, f.i22)));
    }
    Ok((BoundReport::new(BoundKind::CrUKnownLf, 1.0 / f.i11), BoundReport::new(BoundKind::CrLfKnownU, 1.0 / f.i22)))
}

/// Limits of the bounds as `N` grows with the window `t_total` fixed:
/// `u` (joint), `lambda_f`, `lambda_n`, and `u` with `lambda_f` known.
pub fn cr_asymptotes(params: &TrafficParams, t_total: f64) -> Result<Vec<BoundReport>> {
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(domain(format!("observation window must be positive, got {t_total}")));
    }
    let (u, lf, ln, t) = (params.u(), params.lambda_f(), params.lambda_n(), t_total);
    Ok(vec![
        BoundReport::new(BoundKind::CrUJointLimit, u_limit(u, lf, t)),
        BoundReport::new(BoundKind::CrLfLimit, lf * (u + t * lf) / (t * (1.0 - u) * (2.0 * u + t * lf))),
        BoundReport::new(BoundKind::CrLnLimit, ln * ((1.0 - u) + t * ln) / (t * u * (2.0 * (1.0 - u) + t * ln))),
        BoundReport::new(BoundKind::CrUKnownLfLimit, u_known_lf_limit(u, lf, t)),
    ])
}

fn u_limit(u: f64, lf: f64, t: f64) -> f64 {
    u * (1.0 - u) / (1.0 + t * lf / (2.0 * u))
}

/// Asymptotic bound on `u` with `lambda_f` known.
pub fn u_known_lf_limit(u: f64, lf: f64, t: f64) -> f64 {
    u * (1.0 - u) / (1.0 + lf * t / u)
}

/// `sum_{i=1}^{N-1} (N - i) g^i` where `g = e^{-x}`.
fn lagged_geometric_sum(n: usize, x: f64) -> f64 {
    let nf = n as f64;
    if nf * x < 0.1 {
        // closed form cancels badly here; the terms are all positive
        let g = (-x).exp();
        let mut acc = 0.0;
        let mut gi = 1.0;
        for i in 1..n {
            gi *= g;
            acc += (nf - i as f64) * gi;
        }
        return acc;
    }
    let g = (-x).exp();
    let a = -(-x).exp_m1();
    let b = -(-nf * x).exp_m1();
    g * (nf * a - b) / (a * a)
}

/// `sum_{i=1}^{N-1} sum_{j=1}^{N-i} prod_{k=j}^{i+j-1} g_k`: the sum of lagged
/// correlation products over all sample pairs.
fn correlation_sum(params: &TrafficParams, plan: &SamplingPlan) -> f64 {
    let rate = params.relaxation_rate();
    if let Some(gap) = plan.uniform_gap() {
        return lagged_geometric_sum(plan.len(), rate * gap);
    }
    let gammas: Vec<f64> = plan.gaps().iter().map(|&g| (-rate * g).exp()).collect();
    let mut total = 0.0;
    for start in 0..gammas.len() {
        let mut prod = 1.0;
        for &g in &gammas[start..] {
            prod *= g;
            if prod < 1e-300 {
                break;
            }
            total += prod;
        }
    }
    total
}

fn sensing_variance(u: f64, model: &SensingModel) -> f64 {
    let d = 1.0 - model.p_f - model.p_m;
    (u * model.p_m * (1.0 - model.p_m) + (1.0 - u) * model.p_f * (1.0 - model.p_f)) / (d * d)
}

fn check_model(model: &SensingModel) -> Result<()> {
    if model.p_f + model.p_m >= 1.0 {
        return Err(domain("p_f + p_m must be below 1"));
    }
    Ok(())
}

/// Mean squared error of the bias-corrected averaging estimator.
pub fn mse_avg(params: &TrafficParams, plan: &SamplingPlan, model: &SensingModel) -> Result<BoundReport> {
    check_model(model)?;
    let u = params.u();
    let n = plan.len() as f64;
    let v = 2.0 * u * (1.0 - u) / (n * n) * correlation_sum(params, plan)
        + u * (1.0 - u) / n
        + sensing_variance(u, model) / n;
    let kind = if plan.uniform_gap().is_some() { BoundKind::MseAvgUniform } else { BoundKind::MseAvg };
    Ok(BoundReport::new(kind, v))
}

/// Limit of the uniform-sampling averaging MSE as `N` grows in a fixed window.
pub fn mse_avg_uniform_limit(params: &TrafficParams, t_total: f64) -> Result<BoundReport> {
    if !(t_total > 0.0) {
        return Err(domain(format!("observation window must be positive, got {t_total}")));
    }
    let u = params.u();
    let eta = t_total * params.relaxation_rate();
    // (e^{-eta} + eta - 1) / eta^2
    let ratio = if eta < 1e-4 {
        0.5 - eta / 6.0 + eta.powi(2) / 24.0 - eta.powi(3) / 120.0 + eta.powi(4) / 720.0 - eta.powi(5) / 5040.0
    } else {
        ((-eta).exp_m1() + eta) / (eta * eta)
    };
    Ok(BoundReport::new(BoundKind::MseAvgUniformLimit, 2.0 * u * (1.0 - u) * ratio))
}

/// The averaging MSE built one sample at a time: start from the two-sample
/// value and add each new sample's cross-correlation and variance terms.
pub fn mse_avg_recursive_check(
    params: &TrafficParams,
    plan: &SamplingPlan,
    model: &SensingModel,
) -> Result<BoundReport> {
    check_model(model)?;
    if plan.len() < 2 {
        return Err(domain("need at least 2 samples"));
    }
    let u = params.u();
    let uu = u * (1.0 - u);
    let (pf, pm) = (model.p_f, model.p_m);
    let d = 1.0 - pf - pm;
    let rate = params.relaxation_rate();
    let gammas: Vec<f64> = plan.gaps().iter().map(|&g| (-rate * g).exp()).collect();

    let mut v = uu * gammas[0] / 2.0 + uu / 2.0 + (u * pm * (1.0 - pm) + (1.0 - u) * pf * (1.0 - pf)) / (2.0 * d * d);
    for m in 2..plan.len() {
        let nf = m as f64;
        let np1 = nf + 1.0;
        // sum_{j=1}^{m} prod_{k=j}^{m} g_k
        let mut tail = 0.0;
        let mut prod = 1.0;
        for &g in gammas[..m].iter().rev() {
            prod *= g;
            tail += prod;
        }
        let theta1 = 2.0 * nf * u * u / (np1 * np1) + 2.0 * uu / (np1 * np1) * tail;
        let theta2 = (pf * (1.0 - pf) + u * (1.0 - 2.0 * pf) * d) / (np1 * np1 * d * d);
        v = nf * nf * v / (np1 * np1) + theta1 + theta2 - (2.0 * nf + 1.0) * u * u / (np1 * np1);
    }
    Ok(BoundReport::new(BoundKind::MseAvg, v))
}

/// The averaging MSE by summing `S^2 Pr(observed)` over every observation
/// vector and subtracting `u^2`.
pub fn mse_avg_by_enumeration(
    params: &TrafficParams,
    plan: &SamplingPlan,
    model: &SensingModel,
) -> Result<BoundReport> {
    check_model(model)?;
    let n = plan.len();
    if n > ENUMERATION_CAP {
        return Err(Error::Capacity { n, cap: ENUMERATION_CAP });
    }
    let d = 1.0 - model.p_f - model.p_m;
    let mut second_moment = 0.0;
    for code in 0u32..1 << n {
        let bits: Vec<u8> = (0..n).map(|i| ((code >> i) & 1) as u8).collect();
        let ones = code.count_ones() as f64;
        let s = (ones / n as f64 - model.p_f) / d;
        let p = loglik_noisy_forward(&SampleVector::new(bits, plan.clone())?, params, model).prob();
        second_moment += s * s * p;
    }
    let u = params.u();
    Ok(BoundReport::new(BoundKind::MseAvg, second_moment - u * u))
}
