//! Log-likelihood of binary sample vectors, with and without sensing errors.
//!
//! The noisy likelihood has two evaluators. [`loglik_noisy_bruteforce`]
//! sums over every hidden sequence and is kept as a reference for small `N`;
//! [`loglik_noisy_forward`] runs a normalized two-state forward filter and is
//! what the estimators use.

use crate::error::{domain, Error, Result};
use crate::traffic::{SampleVector, SensingModel, TrafficParams, TransitionCounts, TransitionKernel};

/// Largest `N` the brute-force evaluators accept by default.
pub const ENUMERATION_CAP: usize = 14;

/// Natural log of a probability. `underflowed` is set when the value is `-inf`,
/// i.e. the data has zero probability under the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub underflowed: bool,
}

impl LogLikelihood {
    pub(crate) fn new(value: f64) -> Self {
        let value = if value.is_nan() { f64::NEG_INFINITY } else { value };
        Self { value, underflowed: value == f64::NEG_INFINITY }
    }

    pub const NEG_INFINITY: LogLikelihood = LogLikelihood { value: f64::NEG_INFINITY, underflowed: true };

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn prob(&self) -> f64 {
        self.value.exp()
    }
}

/// `count * ln(p)` with `0 * ln(0) = 0`.
#[inline]
fn weighted_log(count: u64, p: f64) -> f64 {
    if count == 0 {
        0.0
    } else if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        count as f64 * p.ln()
    }
}

#[inline]
fn first_sample_log(z1: u8, u: f64) -> f64 {
    if z1 == 1 {
        u.ln()
    } else {
        (-u).ln_1p()
    }
}

/// Error-free log-likelihood under uniform sampling with gap `t_c`, from
/// the sufficient statistic alone.
pub fn loglik_clean(counts: &TransitionCounts, params: &TrafficParams, t_c: f64) -> Result<LogLikelihood> {
    if !(t_c > 0.0) {
        return Err(domain(format!("sampling gap must be positive, got {t_c}")));
    }
    Ok(loglik_counts(counts, params, &params.kernel(t_c)?))
}

pub(crate) fn loglik_counts(counts: &TransitionCounts, params: &TrafficParams, k: &TransitionKernel) -> LogLikelihood {
    let v = first_sample_log(counts.z1, params.u())
        + weighted_log(counts.n00, k.p[0][0])
        + weighted_log(counts.n01, k.p[0][1])
        + weighted_log(counts.n10, k.p[1][0])
        + weighted_log(counts.n11, k.p[1][1]);
    LogLikelihood::new(v)
}

/// Kernels for each gap of a plan, reusing the previous one when
/// consecutive gaps are equal.
pub(crate) struct GapKernels {
    kernels: Vec<TransitionKernel>,
    index: Vec<u32>,
}

impl GapKernels {
    pub(crate) fn new(params: &TrafficParams, gaps: &[f64]) -> Self {
        let mut kernels: Vec<TransitionKernel> = Vec::new();
        let mut last_gap = f64::NAN;
        let mut index = Vec::with_capacity(gaps.len());
        for &g in gaps {
            if g != last_gap {
                kernels.push(TransitionKernel::new_unchecked(params, g));
                last_gap = g;
            }
            index.push((kernels.len() - 1) as u32);
        }
        Self { kernels, index }
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> &TransitionKernel {
        &self.kernels[self.index[i] as usize]
    }
}

/// Error-free log-likelihood for an arbitrary plan. Uniform plans go through
/// [`loglik_clean`] on the transition counts.
pub fn loglik_clean_general(samples: &SampleVector, params: &TrafficParams) -> LogLikelihood {
    let bits = samples.bits();
    if bits.len() == 1 {
        return LogLikelihood::new(first_sample_log(bits[0], params.u()));
    }
    if let Some(gap) = samples.plan().uniform_gap() {
        let counts = TransitionCounts::from_bits(bits).expect("N >= 2");
        return loglik_counts(&counts, params, &TransitionKernel::new_unchecked(params, gap));
    }
    let kernels = GapKernels::new(params, samples.plan().gaps());
    let mut v = first_sample_log(bits[0], params.u());
    for (i, w) in bits.windows(2).enumerate() {
        v += weighted_log(1, kernels.get(i).prob(w[0], w[1]));
    }
    LogLikelihood::new(v)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + s.ln()
}

/// `ln S(observed | hidden)`: independent per-sample flips counted as false
/// alarms, correct idles, mis-detections and correct detections.
fn log_channel(observed: &[u8], hidden: &[u8], model: &SensingModel) -> f64 {
    let mut m = [0u64; 4];
    for (&o, &h) in observed.iter().zip(hidden) {
        let idx = match (h, o) {
            (0, 1) => 0,
            (0, _) => 1,
            (_, 0) => 2,
            _ => 3,
        };
        m[idx] += 1;
    }
    weighted_log(m[0], model.p_f)
        + weighted_log(m[1], 1.0 - model.p_f)
        + weighted_log(m[2], model.p_m)
        + weighted_log(m[3], 1.0 - model.p_m)
}

/// Sensing-error likelihood by summing over all `2^N` hidden sequences.
pub fn loglik_noisy_bruteforce(
    samples: &SampleVector,
    params: &TrafficParams,
    model: &SensingModel,
) -> Result<LogLikelihood> {
    loglik_noisy_bruteforce_capped(samples, params, model, ENUMERATION_CAP)
}

pub fn loglik_noisy_bruteforce_capped(
    samples: &SampleVector,
    params: &TrafficParams,
    model: &SensingModel,
    cap: usize,
) -> Result<LogLikelihood> {
    let n = samples.len();
    if n > cap {
        return Err(Error::Capacity { n, cap });
    }
    let observed = samples.bits();
    let mut hidden = vec![0u8; n];
    let terms: Vec<f64> = (0u64..1 << n)
        .map(|code| {
            for (i, h) in hidden.iter_mut().enumerate() {
                *h = ((code >> (n - 1 - i)) & 1) as u8;
            }
            let prior = loglik_clean_general(&samples.with_bits(hidden.clone()).expect("valid bits"), params).value;
            if prior == f64::NEG_INFINITY {
                prior
            } else {
                prior + log_channel(observed, &hidden, model)
            }
        })
        .collect();
    Ok(LogLikelihood::new(log_sum_exp(&terms)))
}

/// Sensing-error likelihood in `O(N)` by forward filtering over the hidden state.
pub fn loglik_noisy_forward(samples: &SampleVector, params: &TrafficParams, model: &SensingModel) -> LogLikelihood {
    let bits = samples.bits();
    let plan = samples.plan();
    match plan.uniform_gap() {
        Some(gap) => {
            let k = TransitionKernel::new_unchecked(params, gap);
            forward(bits, params.u(), model, |_| &k)
        }
        None => {
            let kernels = GapKernels::new(params, plan.gaps());
            forward(bits, params.u(), model, |i| kernels.get(i))
        }
    }
}

#[inline]
fn forward<'a, F>(bits: &[u8], u: f64, model: &SensingModel, kernel_at: F) -> LogLikelihood
where
    F: Fn(usize) -> &'a TransitionKernel,
{
    // emission[state][observed]
    let e = [[model.emission(0, 0), model.emission(0, 1)], [model.emission(1, 0), model.emission(1, 1)]];
    let z = bits[0] as usize;
    let mut w0 = (1.0 - u) * e[0][z];
    let mut w1 = u * e[1][z];
    let mut log_norm = 0.0;
    for (i, &b) in bits.iter().enumerate() {
        if i > 0 {
            let k = kernel_at(i - 1);
            let z = b as usize;
            let n0 = (w0 * k.p[0][0] + w1 * k.p[1][0]) * e[0][z];
            let n1 = (w0 * k.p[0][1] + w1 * k.p[1][1]) * e[1][z];
            w0 = n0;
            w1 = n1;
        }
        let c = w0 + w1;
        if !(c > 0.0) {
            return LogLikelihood::NEG_INFINITY;
        }
        log_norm += c.ln();
        w0 /= c;
        w1 /= c;
    }
    LogLikelihood::new(log_norm)
}

impl TransitionKernel {
    pub(crate) fn new_unchecked(params: &TrafficParams, t: f64) -> Self {
        params.kernel(t).expect("non-negative gap")
    }
}
