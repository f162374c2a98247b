//! On/off primary-user traffic: parameters, sampling plans, path generation
//! and the sensing-error channel.
//!
//! State `0` is idle (off), state `1` is busy (on). Off-times are exponential
//! with rate `lambda_f`, on-times exponential with rate `lambda_n`, and the
//! long-run fraction of busy time is `u = lambda_f / (lambda_f + lambda_n)`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::rng::{rng_from_seed, TrafficRng};

/// Duty cycle plus departure and arrival rates, kept mutually consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    u: f64,
    lambda_f: f64,
    lambda_n: f64,
}

fn check_prob_open(name: &str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {p}")))
    }
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be a positive finite rate, got {r}")))
    }
}

impl TrafficParams {
    pub fn from_u_lambda_f(u: f64, lambda_f: f64) -> Result<Self> {
        check_prob_open("u", u)?;
        check_rate("lambda_f", lambda_f)?;
        let lambda_n = lambda_f * (1.0 - u) / u;
        check_rate("lambda_n", lambda_n)?;
        Ok(Self { u, lambda_f, lambda_n })
    }

    pub fn from_u_lambda_n(u: f64, lambda_n: f64) -> Result<Self> {
        check_prob_open("u", u)?;
        check_rate("lambda_n", lambda_n)?;
        let lambda_f = lambda_n * u / (1.0 - u);
        check_rate("lambda_f", lambda_f)?;
        Ok(Self { u, lambda_f, lambda_n })
    }

    pub fn from_rates(lambda_f: f64, lambda_n: f64) -> Result<Self> {
        check_rate("lambda_f", lambda_f)?;
        check_rate("lambda_n", lambda_n)?;
        let u = lambda_f / (lambda_f + lambda_n);
        check_prob_open("u", u)?;
        Ok(Self { u, lambda_f, lambda_n })
    }

    /// Builds from whichever two of the three quantities are given.
    pub fn from_any_two(u: Option<f64>, lambda_f: Option<f64>, lambda_n: Option<f64>) -> Result<Self> {
        match (u, lambda_f, lambda_n) {
            (Some(u), Some(lf), None) => Self::from_u_lambda_f(u, lf),
            (Some(u), None, Some(ln)) => Self::from_u_lambda_n(u, ln),
            (None, Some(lf), Some(ln)) => Self::from_rates(lf, ln),
            _ => Err(invalid("exactly two of u, lambda_f, lambda_n must be given")),
        }
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn lambda_f(&self) -> f64 {
        self.lambda_f
    }

    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    /// Rate at which the chain forgets its state, `lambda_f / u = lambda_f + lambda_n`.
    pub fn relaxation_rate(&self) -> f64 {
        self.lambda_f / self.u
    }

    /// The same process with the on and off labels exchanged.
    pub fn relabeled(&self) -> Self {
        Self { u: 1.0 - self.u, lambda_f: self.lambda_n, lambda_n: self.lambda_f }
    }

    pub fn kernel(&self, t: f64) -> Result<TransitionKernel> {
        if !(t >= 0.0) {
            return Err(domain(format!("elapsed time must be non-negative, got {t}")));
        }
        Ok(TransitionKernel::new(self, t))
    }
}

/// Two-point transition probabilities `Pr_xy(t)` over a single gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionKernel {
    /// `e^{-lambda_f t / u}`
    pub gamma: f64,
    /// `p[x][y] = Pr_xy(t)`
    pub p: [[f64; 2]; 2],
}

impl TransitionKernel {
    fn new(params: &TrafficParams, t: f64) -> Self {
        let u = params.u;
        let x = params.lambda_f * t / params.u;
        // exponent first; exp underflows cleanly to 0 for huge x
        let gamma = (-x).exp();
        let one_minus_gamma = -(-x).exp_m1();
        let p00 = (1.0 - u) + u * gamma;
        let p01 = u * one_minus_gamma;
        let p11 = u + (1.0 - u) * gamma;
        let p10 = (1.0 - u) * one_minus_gamma;
        Self { gamma, p: [[p00, p01], [p10, p11]] }
    }

    #[inline]
    pub fn prob(&self, from: u8, to: u8) -> f64 {
        self.p[from as usize][to as usize]
    }
}

/// `Pr_xy(t)`: probability of being in state `to` a time `t` after being in `from`.
pub fn transition_prob(params: &TrafficParams, from_state: u8, to_state: u8, t: f64) -> Result<f64> {
    if from_state > 1 || to_state > 1 {
        return Err(domain("states are 0 (idle) or 1 (busy)"));
    }
    Ok(params.kernel(t)?.prob(from_state, to_state))
}

/// Inter-sample gaps `T_1..T_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    gaps: Vec<f64>,
    uniform_gap: Option<f64>,
}

impl SamplingPlan {
    /// `n` samples spread evenly over a window of `duration` seconds.
    pub fn uniform(duration: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("a uniform plan needs at least 2 samples, got {n}")));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid(format!("observation window must be positive, got {duration}")));
        }
        let gap = duration / (n - 1) as f64;
        Ok(Self { gaps: vec![gap; n - 1], uniform_gap: Some(gap) })
    }

    /// Arbitrary positive gaps. An empty list is a single-sample plan.
    pub fn from_gaps(gaps: Vec<f64>) -> Result<Self> {
        if let Some(bad) = gaps.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid(format!("inter-sample times must be positive, got {bad}")));
        }
        let uniform_gap = match gaps.first() {
            Some(&g) if gaps.iter().all(|&x| x == g) => Some(g),
            _ => None,
        };
        Ok(Self { gaps, uniform_gap })
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.gaps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total observation window `T`.
    pub fn duration(&self) -> f64 {
        self.gaps.iter().sum()
    }

    /// The common gap when every gap is identical.
    pub fn uniform_gap(&self) -> Option<f64> {
        self.uniform_gap
    }

    /// First `n` samples of this plan.
    pub fn prefix(&self, n: usize) -> Self {
        let gaps = self.gaps[..n.saturating_sub(1).min(self.gaps.len())].to_vec();
        let uniform_gap = if gaps.is_empty() { None } else { self.uniform_gap };
        Self { gaps, uniform_gap }
    }
}

/// Sensing channel: false-alarm and mis-detection probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingModel {
    pub p_f: f64,
    pub p_m: f64,
}

impl SensingModel {
    pub const PERFECT: SensingModel = SensingModel { p_f: 0.0, p_m: 0.0 };

    pub fn new(p_f: f64, p_m: f64) -> Result<Self> {
        for (name, p) in [("p_f", p_f), ("p_m", p_m)] {
            if !(0.0..1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        if p_f + p_m >= 1.0 {
            return Err(invalid(format!("p_f + p_m must be below 1, got {}", p_f + p_m)));
        }
        Ok(Self { p_f, p_m })
    }

    pub fn is_perfect(&self) -> bool {
        self.p_f == 0.0 && self.p_m == 0.0
    }

    /// Probability that hidden `state` is observed as `observed`.
    #[inline]
    pub fn emission(&self, state: u8, observed: u8) -> f64 {
        match (state, observed) {
            (0, 0) => 1.0 - self.p_f,
            (0, _) => self.p_f,
            (_, 0) => self.p_m,
            _ => 1.0 - self.p_m,
        }
    }
}

impl Default for SensingModel {
    fn default() -> Self {
        Self::PERFECT
    }
}

/// Binary samples paired with the plan that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleVector {
    bits: Vec<u8>,
    plan: SamplingPlan,
}

impl SampleVector {
    pub fn new(bits: Vec<u8>, plan: SamplingPlan) -> Result<Self> {
        if bits.len() != plan.len() {
            return Err(invalid(format!("{} bits do not match a plan of {} samples", bits.len(), plan.len())));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid("samples must be 0 or 1"));
        }
        Ok(Self { bits, plan })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn mean(&self) -> f64 {
        self.ones() as f64 / self.len() as f64
    }

    pub fn with_bits(&self, bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, self.plan.clone())
    }
}

/// First sample and counts of `0->0`, `0->1`, `1->0`, `1->1` transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub z1: u8,
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl TransitionCounts {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() < 2 {
            return Err(domain(format!("need at least 2 samples to count transitions, got {}", bits.len())));
        }
        let mut n = [0u64; 4];
        for w in bits.windows(2) {
            n[(2 * w[0] + w[1]) as usize] += 1;
        }
        Ok(Self { z1: bits[0], n00: n[0], n01: n[1], n10: n[2], n11: n[3] })
    }

    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    /// Whether at least one state change was observed.
    pub fn has_switches(&self) -> bool {
        self.n01 + self.n10 > 0
    }

    pub fn as_array(&self) -> [u64; 4] {
        [self.n00, self.n01, self.n10, self.n11]
    }
}

pub fn count_transitions(samples: &SampleVector) -> Result<TransitionCounts> {
    TransitionCounts::from_bits(samples.bits())
}

/// Simulates the alternating exponential renewal process and reads its
/// state at each sampling instant. The first state is drawn from the
/// stationary law; by memorylessness the residual holding time is then a
/// fresh exponential draw.
pub fn generate_samples_with(params: &TrafficParams, plan: &SamplingPlan, rng: &mut TrafficRng) -> SampleVector {
    let leave_rate = [params.lambda_f, params.lambda_n];
    let mut state: u8 = rng.gen_bool(params.u) as u8;
    let mut remaining: f64 = rng.sample::<f64, _>(Exp1) / leave_rate[state as usize];
    let mut bits = Vec::with_capacity(plan.len());
    bits.push(state);
    for &gap in plan.gaps() {
        let mut left = gap;
        while remaining <= left {
            left -= remaining;
            state ^= 1;
            remaining = rng.sample::<f64, _>(Exp1) / leave_rate[state as usize];
        }
        remaining -= left;
        bits.push(state);
    }
    SampleVector { bits, plan: plan.clone() }
}

pub fn generate_samples(params: &TrafficParams, plan: &SamplingPlan, rng_seed: u64) -> SampleVector {
    generate_samples_with(params, plan, &mut rng_from_seed(rng_seed))
}

/// Flips idle samples with probability `p_f` and busy samples with probability `p_m`.
pub fn apply_sensing_errors_with(samples: &SampleVector, model: &SensingModel, rng: &mut TrafficRng) -> SampleVector {
    if model.is_perfect() {
        return samples.clone();
    }
    let bits = samples
        .bits
        .iter()
        .map(|&b| {
            let flip = rng.gen_bool(if b == 0 { model.p_f } else { model.p_m });
            b ^ flip as u8
        })
        .collect();
    SampleVector { bits, plan: samples.plan.clone() }
}

pub fn apply_sensing_errors(samples: &SampleVector, model: &SensingModel, rng_seed: u64) -> SampleVector {
    apply_sensing_errors_with(samples, model, &mut rng_from_seed(rng_seed))
}
