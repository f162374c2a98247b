//! Estimation of the duty cycle and switching rates of an on/off primary
//! user from binary channel samples, with Cramér-Rao bounds and Monte Carlo
//! sweeps for comparing estimators against them.
//!
//! The channel is a two-state continuous-time Markov chain: idle periods
//! last `Exp(lambda_f)`, busy periods `Exp(lambda_n)`, and the duty cycle is
//! `u = lambda_f / (lambda_f + lambda_n)`. A secondary user samples the state
//! `N` times over a window `T`, possibly with false alarms (`p_f`) and missed
//! detections (`p_m`).
//!
//! ```
//! use putraffic_core::{estimate_ml_joint_uf, generate_samples, SamplingPlan, SensingModel, TrafficParams};
//!
//! let truth = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
//! let plan = SamplingPlan::uniform(50.0, 200).unwrap();
//! let samples = generate_samples(&truth, &plan, 7);
//! let est = estimate_ml_joint_uf(&samples, &SensingModel::PERFECT).unwrap();
//! assert!((est.u_hat - 0.3).abs() < 0.25);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod likelihood;
pub mod optim;
pub mod rng;
pub mod traffic;

pub use bounds::{
    cr_asymptotes, cr_bounds_joint_uf, cr_bounds_joint_un, cr_bounds_known, fisher_matrix, mse_avg,
    mse_avg_uniform_limit, BoundKind, BoundReport, FisherInfo,
};
pub use error::{Error, Result};
pub use estimators::{
    estimate_avg, estimate_ml_joint_uf, estimate_ml_joint_un, estimate_ml_lf_known_u, estimate_ml_u_known_lf,
    run_estimator, EstimateReport, EstimatorId,
};
pub use experiments::{run_sweep, SweepConfig, SweepResultRow};
pub use likelihood::{
    loglik_clean, loglik_clean_general, loglik_noisy_bruteforce, loglik_noisy_forward, LogLikelihood,
};
pub use traffic::{
    apply_sensing_errors, count_transitions, generate_samples, transition_prob, SampleVector, SamplingPlan,
    SensingModel, TrafficParams, TransitionCounts, TransitionKernel,
};
