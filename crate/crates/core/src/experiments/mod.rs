//! Monte Carlo sweeps comparing estimators with their bounds, and the
//! identity suites behind `putraffic verify`.

pub mod config;
pub mod sweep;
pub mod verify;

pub use config::{Axis, AxisName, FixedParams, SensingSpec, SweepConfig, SweepPoint};
pub use sweep::{csv_string, format_sig9, run_sweep, write_csv, SweepResultRow, CSV_COLUMNS, THREADS_ENV};
pub use verify::SuiteReport;
