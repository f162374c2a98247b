use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{cr_asymptotes, cr_bounds_joint_uf, cr_bounds_known, mse_avg, u_known_lf_limit};
use crate::error::Result;
use crate::estimators::{run_estimator, EstimatorId};
use crate::rng::{rng_from_seed, trial_seed, Lane};
use crate::traffic::{apply_sensing_errors_with, generate_samples_with, SamplingPlan, SensingModel, TrafficParams};

use super::config::{AxisName, SweepConfig, SweepPoint};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "PUTRAFFIC_THREADS";

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 14] = [
    "axis_name",
    "axis_value",
    "estimator",
    "pf",
    "pm",
    "rms_u",
    "rms_lf",
    "rms_ln",
    "crb_u",
    "crb_lf",
    "crb_u_limit",
    "mse_avg_closed_form",
    "trials",
    "boundary_fraction",
];

/// One line of sweep output. Bound columns hold square roots, so they read
/// on the same scale as the RMS columns; the CR bounds assume error-free
/// sensing whatever the row's model. `None` marks a quantity the estimator
/// does not produce or a bound that does not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResultRow {
    pub axis_name: AxisName,
    pub axis_value: f64,
    pub estimator: EstimatorId,
    pub pf: f64,
    pub pm: f64,
    pub rms_u: Option<f64>,
    pub rms_lf: Option<f64>,
    pub rms_ln: Option<f64>,
    pub crb_u: Option<f64>,
    pub crb_lf: Option<f64>,
    pub crb_u_limit: Option<f64>,
    pub mse_avg_closed_form: Option<f64>,
    pub trials: usize,
    pub boundary_fraction: Option<f64>,
}

/// Which parameters an estimator actually estimates: `(u, lambda_f, lambda_n)`.
fn estimated(id: EstimatorId) -> (bool, bool, bool) {
    match id {
        EstimatorId::Avg => (true, false, false),
        EstimatorId::MlJointF | EstimatorId::MlJointN => (true, true, true),
        EstimatorId::MlKnownLf => (true, false, true),
        EstimatorId::MlKnownU => (false, true, true),
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    sq_u: f64,
    sq_lf: f64,
    sq_ln: f64,
    boundary: bool,
}

fn skipped(id: EstimatorId, model: &SensingModel, samples: usize, cfg: &SweepConfig) -> bool {
    id != EstimatorId::Avg && !model.is_perfect() && samples > cfg.max_noisy_samples
}

/// Runs one trial of one point: a single path shared by every sensing model
/// and estimator, so comparisons between rows are paired.
fn run_trial(
    cfg: &SweepConfig,
    point_index: usize,
    point: &SweepPoint,
    plan: &SamplingPlan,
    models: &[SensingModel],
    trial: usize,
) -> Result<Vec<Option<Outcome>>> {
    let truth = &point.params;
    let mut path_rng = rng_from_seed(trial_seed(cfg.master_seed, point_index as u64, trial as u64, Lane::Path));
    let clean = generate_samples_with(truth, plan, &mut path_rng);
    let mut out = Vec::with_capacity(models.len() * cfg.estimators.len());
    for model in models {
        let observed = if model.is_perfect() {
            clean.clone()
        } else {
            let mut rng = rng_from_seed(trial_seed(cfg.master_seed, point_index as u64, trial as u64, Lane::Sensing));
            apply_sensing_errors_with(&clean, model, &mut rng)
        };
        for &id in &cfg.estimators {
            if skipped(id, model, point.samples, cfg) {
                out.push(None);
                continue;
            }
            let est = run_estimator(id, &observed, model, Some(truth))?;
            let sq = |hat: Option<f64>, truth: f64| hat.map_or(0.0, |h| (h - truth).powi(2));
            out.push(Some(Outcome {
                sq_u: (est.u_hat - truth.u()).powi(2),
                sq_lf: sq(est.lambda_f_hat, truth.lambda_f()),
                sq_ln: sq(est.lambda_n_hat, truth.lambda_n()),
                boundary: est.boundary_hit,
            }));
        }
    }
    Ok(out)
}

struct PointBounds {
    joint_u: Option<f64>,
    joint_lf: Option<f64>,
    known_lf_u: Option<f64>,
    known_u_lf: Option<f64>,
    u_limit: Option<f64>,
    known_lf_u_limit: Option<f64>,
}

fn point_bounds(params: &TrafficParams, plan: &SamplingPlan, duration: f64) -> PointBounds {
    let t_c = plan.uniform_gap().unwrap_or(duration);
    let n = plan.len();
    let joint = cr_bounds_joint_uf(params, t_c, n).ok();
    let known = cr_bounds_known(params, t_c, n).ok();
    PointBounds {
        joint_u: joint.map(|b| b.0.value),
        joint_lf: joint.map(|b| b.1.value),
        known_lf_u: known.map(|b| b.0.value),
        known_u_lf: known.map(|b| b.1.value),
        u_limit: cr_asymptotes(params, duration).ok().map(|v| v[0].value),
        known_lf_u_limit: Some(u_known_lf_limit(params.u(), params.lambda_f(), duration)),
    }
}

fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Runs every `(point, sensing model, estimator)` cell of the sweep.
///
/// Trials run in parallel but each writes to its own slot and the slots are
/// summed in trial order, so the output does not depend on the thread count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepResultRow>> {
    cfg.validate()?;
    let models = cfg.sensing_models()?;
    let trials = cfg.trials();
    let n_est = cfg.estimators.len();
    let mut rows = Vec::new();

    for (point_index, point) in cfg.points()?.iter().enumerate() {
        let plan = SamplingPlan::uniform(cfg.duration, point.samples)?;
        let outcomes: Vec<Vec<Option<Outcome>>> = install(|| {
            (0..trials)
                .into_par_iter()
                .map(|trial| run_trial(cfg, point_index, point, &plan, &models, trial))
                .collect::<Result<_>>()
        })?;
        let bounds = point_bounds(&point.params, &plan, cfg.duration);

        for (m, model) in models.iter().enumerate() {
            let mse_closed = mse_avg(&point.params, &plan, model).ok().map(|b| b.value.sqrt());
            for (e, &id) in cfg.estimators.iter().enumerate() {
                let slot = m * n_est + e;
                let mut sum = Outcome::default();
                let mut used = 0usize;
                let mut hits = 0usize;
                for o in outcomes.iter().filter_map(|t| t[slot]) {
                    sum.sq_u += o.sq_u;
                    sum.sq_lf += o.sq_lf;
                    sum.sq_ln += o.sq_ln;
                    hits += o.boundary as usize;
                    used += 1;
                }
                let (has_u, has_lf, has_ln) = estimated(id);
                let rms = |has: bool, s: f64| (has && used > 0).then(|| (s / used as f64).sqrt());
                let (crb_u, crb_lf, crb_u_limit) = match id {
                    EstimatorId::Avg | EstimatorId::MlJointF | EstimatorId::MlJointN => {
                        (bounds.joint_u, if id == EstimatorId::Avg { None } else { bounds.joint_lf }, bounds.u_limit)
                    }
                    EstimatorId::MlKnownLf => (bounds.known_lf_u, None, bounds.known_lf_u_limit),
                    EstimatorId::MlKnownU => (None, bounds.known_u_lf, None),
                };
                rows.push(SweepResultRow {
                    axis_name: cfg.axis.name,
                    axis_value: point.axis_value,
                    estimator: id,
                    pf: model.p_f,
                    pm: model.p_m,
                    rms_u: rms(has_u, sum.sq_u),
                    rms_lf: rms(has_lf, sum.sq_lf),
                    rms_ln: rms(has_ln, sum.sq_ln),
                    crb_u: crb_u.map(f64::sqrt),
                    crb_lf: crb_lf.map(f64::sqrt),
                    crb_u_limit: crb_u_limit.map(f64::sqrt),
                    mse_avg_closed_form: mse_closed,
                    trials: used,
                    boundary_fraction: (used > 0).then(|| hits as f64 / used as f64),
                });
            }
        }
    }
    Ok(rows)
}

/// Formats `x` with 9 significant digits, in positional notation when the
/// magnitude allows and scientific notation otherwise.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

fn axis_cell(name: AxisName, v: f64) -> String {
    if name == AxisName::Samples {
        format!("{}", v as u64)
    } else {
        format_sig9(v)
    }
}

pub fn write_csv<W: Write>(rows: &[SweepResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        let fields = [
            r.axis_name.as_str().to_string(),
            axis_cell(r.axis_name, r.axis_value),
            r.estimator.as_str().to_string(),
            format_sig9(r.pf),
            format_sig9(r.pm),
            cell(r.rms_u),
            cell(r.rms_lf),
            cell(r.rms_ln),
            cell(r.crb_u),
            cell(r.crb_lf),
            cell(r.crb_u_limit),
            cell(r.mse_avg_closed_form),
            r.trials.to_string(),
            cell(r.boundary_fraction),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn csv_string(rows: &[SweepResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}
