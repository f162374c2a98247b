use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorId;
use crate::traffic::{SensingModel, TrafficParams};

/// Default trial count for sweeps that run any ML estimator.
pub const DEFAULT_TRIALS_ML: usize = 2000;
/// Default trial count for sweeps that only run the averaging estimator.
pub const DEFAULT_TRIALS_AVG: usize = 100_000;
/// Default largest `N` at which ML estimators run under sensing errors.
pub const DEFAULT_MAX_NOISY_SAMPLES: usize = 2000;

/// Parameters held fixed across a sweep. Together with the axis they must
/// pin down exactly two of `u`, `lambda_f`, `lambda_n`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedParams {
    pub u: Option<f64>,
    pub lambda_f: Option<f64>,
    pub lambda_n: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Samples,
    U,
    LambdaF,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Samples => "samples",
            Self::U => "u",
            Self::LambdaF => "lambda_f",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSpec {
    pub pf: f64,
    pub pm: f64,
}

impl SensingSpec {
    pub fn model(&self) -> Result<SensingModel> {
        SensingModel::new(self.pf, self.pm)
    }
}

fn perfect_only() -> Vec<SensingSpec> {
    vec![SensingSpec { pf: 0.0, pm: 0.0 }]
}

fn default_max_noisy() -> usize {
    DEFAULT_MAX_NOISY_SAMPLES
}

/// A Monte Carlo sweep over one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub params: FixedParams,
    pub axis: Axis,
    /// Observation window `T` in seconds.
    pub duration: f64,
    /// Number of samples when the axis is not `samples`.
    pub samples: Option<usize>,
    #[serde(default = "perfect_only")]
    pub sensing: Vec<SensingSpec>,
    pub estimators: Vec<EstimatorId>,
    pub trials: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    /// ML estimators are skipped under sensing errors above this `N`.
    #[serde(default = "default_max_noisy")]
    pub max_noisy_samples: usize,
}

/// One point on the sweep axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub params: TrafficParams,
    pub samples: usize,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl SweepConfig {
    /// Reads a config file: JSON when the extension is `.json`, TOML otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg = if is_json { Self::from_json(&text)? } else { Self::from_toml(&text)? };
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(if self.estimators.iter().all(|e| *e == EstimatorId::Avg) {
            DEFAULT_TRIALS_AVG
        } else {
            DEFAULT_TRIALS_ML
        })
    }

    pub fn sensing_models(&self) -> Result<Vec<SensingModel>> {
        self.sensing.iter().map(|s| s.model().map_err(|e| config_error(e.to_string()))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == Some(0) {
            return Err(config_error("trials must be at least 1"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(config_error(format!("duration must be positive, got {}", self.duration)));
        }
        let values = &self.axis.values;
        if values.is_empty() {
            return Err(config_error("sweep axis has no values"));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_error("sweep axis values must be strictly increasing"));
        }
        if self.estimators.is_empty() {
            return Err(config_error("no estimators listed"));
        }
        if self.sensing.is_empty() {
            return Err(config_error("no sensing models listed"));
        }
        self.sensing_models()?;

        let p = &self.params;
        match self.axis.name {
            AxisName::Samples => {
                if self.samples.is_some() {
                    return Err(config_error("`samples` is the sweep axis; remove the fixed value"));
                }
                if values.iter().any(|&v| v < 2.0 || v.fract() != 0.0) {
                    return Err(config_error("sample counts must be integers of at least 2"));
                }
            }
            AxisName::U => {
                if p.u.is_some() {
                    return Err(config_error("`u` is the sweep axis; remove params.u"));
                }
                if p.lambda_f.is_some() == p.lambda_n.is_some() {
                    return Err(config_error("a `u` sweep needs exactly one of params.lambda_f, params.lambda_n"));
                }
            }
            AxisName::LambdaF => {
                if p.lambda_f.is_some() || p.lambda_n.is_some() {
                    return Err(config_error("a `lambda_f` sweep takes only params.u"));
                }
                if p.u.is_none() {
                    return Err(config_error("a `lambda_f` sweep needs params.u"));
                }
            }
        }
        if self.axis.name != AxisName::Samples {
            match self.samples {
                Some(n) if n >= 2 => {}
                _ => return Err(config_error("`samples` must be set to at least 2")),
            }
        }
        self.points()?;
        Ok(())
    }

    /// Expands the axis into concrete points.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let p = &self.params;
        self.axis
            .values
            .iter()
            .map(|&v| {
                let (params, samples) = match self.axis.name {
                    AxisName::Samples => (TrafficParams::from_any_two(p.u, p.lambda_f, p.lambda_n), v as usize),
                    AxisName::U => {
                        (TrafficParams::from_any_two(Some(v), p.lambda_f, p.lambda_n), self.samples.unwrap_or(0))
                    }
                    AxisName::LambdaF => (TrafficParams::from_any_two(p.u, Some(v), None), self.samples.unwrap_or(0)),
                };
                let params = params.map_err(|e| config_error(format!("{} = {v}: {e}", self.axis.name.as_str())))?;
                Ok(SweepPoint { axis_value: v, params, samples })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1A: &str = r#"
duration = 50.0
estimators = ["avg", "ml-joint-f", "ml-known-lf"]
master_seed = 11

[params]
u = 0.3
lambda_f = 0.9

[axis]
name = "samples"
values = [50, 100, 200]

[[sensing]]
pf = 0.0
pm = 0.0

[[sensing]]
pf = 0.05
pm = 0.05
"#;

    #[test]
    fn parses_toml() {
        let cfg = SweepConfig::from_toml(FIG1A).unwrap();
        assert_eq!(cfg.trials(), DEFAULT_TRIALS_ML);
        assert_eq!(cfg.sensing.len(), 2);
        let pts = cfg.points().unwrap();
        assert_eq!(pts[2].samples, 200);
        assert!((pts[0].params.lambda_n() - 2.1).abs() < 1e-12);
    }

    #[test]
    fn json_and_toml_agree() {
        let cfg = SweepConfig::from_toml(FIG1A).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SweepConfig::from_json(&json).unwrap(), cfg);
        assert_eq!(SweepConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn averaging_only_default_trials() {
        let text = FIG1A.replace(r#"["avg", "ml-joint-f", "ml-known-lf"]"#, r#"["avg"]"#);
        assert_eq!(SweepConfig::from_toml(&text).unwrap().trials(), DEFAULT_TRIALS_AVG);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            FIG1A.replace("[50, 100, 200]", "[50, 200, 100]"),
            FIG1A.replace("[50, 100, 200]", "[]"),
            FIG1A.replace("[50, 100, 200]", "[1, 2]"),
            FIG1A.replace("master_seed = 11", "trials = 0"),
            FIG1A.replace("lambda_f = 0.9", "lambda_f = 0.9\nlambda_n = 1.0"),
            FIG1A.replace("pf = 0.05", "pf = 0.95"),
            FIG1A.replace("duration = 50.0", "duration = -1.0"),
            FIG1A.replace("master_seed = 11", "colour = 3"),
            FIG1A.replace("name = \"samples\"", "name = \"u\""),
        ];
        for text in cases {
            assert!(matches!(SweepConfig::from_toml(&text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn u_axis_needs_fixed_samples() {
        let text = r#"
duration = 100.0
samples = 200
estimators = ["ml-joint-f"]
[params]
lambda_f = 0.4
[axis]
name = "u"
values = [0.1, 0.5, 0.9]
"#;
        let cfg = SweepConfig::from_toml(text).unwrap();
        let pts = cfg.points().unwrap();
        assert_eq!(pts[1].samples, 200);
        assert!((pts[1].params.u() - 0.5).abs() < 1e-15);
        assert!(SweepConfig::from_toml(&text.replace("samples = 200\n", "")).is_err());
    }
}
