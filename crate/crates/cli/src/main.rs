use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use putraffic_core::bounds::{cr_bounds_joint_un, cr_bounds_known};
use putraffic_core::experiments::{verify, write_csv};
use putraffic_core::rng::derive_seed;
use putraffic_core::{
    apply_sensing_errors, cr_asymptotes, cr_bounds_joint_uf, generate_samples, mse_avg, mse_avg_uniform_limit,
    run_estimator, run_sweep, EstimatorId, SampleVector, SamplingPlan, SensingModel, SweepConfig, TrafficParams,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "putraffic", version, about = "Estimate on/off channel traffic parameters and their error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form error bounds at a parameter point
    Bounds(BoundsArgs),
    /// Simulate one sample vector and write it as JSON
    Simulate(SimulateArgs),
    /// Run one estimator on a sample file
    Estimate(EstimateArgs),
    /// Run a Monte Carlo sweep described by a config file
    Sweep(SweepArgs),
    /// Run the enumeration and identity suites
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Duty cycle
    #[arg(long)]
    u: Option<f64>,
    /// Departure rate from the idle state (1/s)
    #[arg(long)]
    lambda_f: Option<f64>,
    /// Departure rate from the busy state (1/s)
    #[arg(long)]
    lambda_n: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> Result<TrafficParams, CliError> {
        Ok(TrafficParams::from_any_two(self.u, self.lambda_f, self.lambda_n)?)
    }
}

#[derive(Args)]
struct SensingArgs {
    /// False-alarm probability
    #[arg(long, default_value_t = 0.0)]
    pf: f64,
    /// Missed-detection probability
    #[arg(long, default_value_t = 0.0)]
    pm: f64,
}

impl SensingArgs {
    fn model(&self) -> Result<SensingModel, CliError> {
        Ok(SensingModel::new(self.pf, self.pm)?)
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    sensing: SensingArgs,
    /// Observation window T in seconds
    #[arg(long)]
    duration: f64,
    /// Number of samples N
    #[arg(long)]
    samples: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    sensing: SensingArgs,
    #[arg(long)]
    duration: f64,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Sample file written by `simulate` ("-" for stdin)
    input: PathBuf,
    #[arg(long, default_value = "ml-joint-f")]
    estimator: String,
    /// Known parameters for the known-rate and known-duty-cycle estimators
    #[command(flatten)]
    params: ParamArgs,
    /// Override the false-alarm probability stored in the file
    #[arg(long)]
    pf: Option<f64>,
    /// Override the missed-detection probability stored in the file
    #[arg(long)]
    pm: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output (overrides the config; stdout when neither is set)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest N at which ML estimators run under sensing errors
    #[arg(long)]
    max_noisy_samples: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest N for the enumeration suites
    #[arg(long, default_value_t = 10)]
    max_n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// On-disk form of a uniformly spaced sample vector.
#[derive(Serialize, Deserialize)]
struct SampleFile {
    duration: f64,
    pf: f64,
    pm: f64,
    bits: String,
}

enum CliError {
    Config(String),
    Verify(String),
}

impl From<putraffic_core::Error> for CliError {
    fn from(e: putraffic_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let params = args.params.params()?;
    let model = args.sensing.model()?;
    let plan = SamplingPlan::uniform(args.duration, args.samples)?;
    let t_c = plan.uniform_gap().unwrap_or(args.duration);
    let n = args.samples;

    let mut rows: Vec<(&str, Option<f64>)> = Vec::new();
    let joint = cr_bounds_joint_uf(&params, t_c, n).ok();
    rows.push(("cr_u_joint", joint.map(|b| b.0.value)));
    rows.push(("cr_lf_joint", joint.map(|b| b.1.value)));
    rows.push(("cr_ln_joint", cr_bounds_joint_un(&params, t_c, n).ok().map(|b| b.1.value)));
    let known = cr_bounds_known(&params, t_c, n).ok();
    rows.push(("cr_u_known_lf", known.map(|b| b.0.value)));
    rows.push(("cr_lf_known_u", known.map(|b| b.1.value)));
    for b in cr_asymptotes(&params, args.duration)? {
        rows.push((b.kind.as_str(), Some(b.value)));
    }
    rows.push(("mse_avg", Some(mse_avg(&params, &plan, &model)?.value)));
    rows.push(("mse_avg_uniform_limit", Some(mse_avg_uniform_limit(&params, args.duration)?.value)));

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "u={} lambda_f={} lambda_n={} T={} N={} pf={} pm={}",
        params.u(),
        params.lambda_f(),
        params.lambda_n(),
        args.duration,
        n,
        model.p_f,
        model.p_m
    )?;
    writeln!(out, "{:<24} {:>16} {:>16}", "bound", "mse", "rms")?;
    for (name, v) in rows {
        match v {
            Some(v) => writeln!(out, "{name:<24} {v:>16.9e} {:>16.9e}", v.sqrt())?,
            None => writeln!(out, "{name:<24} {:>16} {:>16}", "n/a", "n/a")?,
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let params = args.params.params()?;
    let model = args.sensing.model()?;
    let plan = SamplingPlan::uniform(args.duration, args.samples)?;
    let clean = generate_samples(&params, &plan, args.seed);
    let observed =
        if model.is_perfect() { clean } else { apply_sensing_errors(&clean, &model, derive_seed(args.seed, &[1])) };
    let file = SampleFile {
        duration: args.duration,
        pf: model.p_f,
        pm: model.p_m,
        bits: observed.bits().iter().map(|&b| if b == 1 { '1' } else { '0' }).collect(),
    };
    let mut out = open_out(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &file).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let id: EstimatorId = args.estimator.parse()?;
    let file: SampleFile =
        serde_json::from_str(&read_input(&args.input)?).map_err(|e| CliError::Config(e.to_string()))?;
    let bits = file
        .bits
        .chars()
        .map(|c| match c {
            '0' => Ok(0u8),
            '1' => Ok(1u8),
            other => Err(CliError::Config(format!("unexpected character {other:?} in bits"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let plan = SamplingPlan::uniform(file.duration, bits.len())?;
    let samples = SampleVector::new(bits, plan)?;
    let model = SensingModel::new(args.pf.unwrap_or(file.pf), args.pm.unwrap_or(file.pm))?;

    let known = match id {
        EstimatorId::MlKnownLf => {
            let lf = args.params.lambda_f.ok_or_else(|| CliError::Config("ml-known-lf needs --lambda-f".into()))?;
            Some(TrafficParams::from_u_lambda_f(0.5, lf)?)
        }
        EstimatorId::MlKnownU => {
            let u = args.params.u.ok_or_else(|| CliError::Config("ml-known-u needs --u".into()))?;
            Some(TrafficParams::from_u_lambda_f(u, 1.0)?)
        }
        _ => None,
    };
    let report = run_estimator(id, &samples, &model, known.as_ref())?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = SweepConfig::from_path(&args.config)?;
    if let Some(t) = args.trials {
        cfg.trials = Some(t);
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(m) = args.max_noisy_samples {
        cfg.max_noisy_samples = m;
    }
    let rows = run_sweep(&cfg)?;
    let target = args.out.clone().or_else(|| cfg.output.clone());
    let mut out = open_out(target.as_deref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn verify_all(args: &VerifyArgs) -> Result<(), CliError> {
    let reports = verify::run_all(args.max_n, args.seed)?;
    let mut out = io::stdout().lock();
    let mut failed = Vec::new();
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{status} {:<26} checks={:<6} worst_rel_err={:.3e} tol={:.0e}",
            r.name, r.checks, r.worst, r.tolerance
        )?;
        if !r.passed() {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(format!("failed suites: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bounds(a) => bounds(a),
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify_all(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Verify(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}
