//! Thickness sweeps, scaling fits and report files.

mod config;
mod fit;
mod sweep;

pub use config::{GridRule, Study, SweepConfig, CONFIG_KEYS};
pub use fit::{fit_exponent, ScalingFit};
pub use sweep::{csv_body, run_sweep, NamedFit, SweepReport, SweepRow, AUDIT_CSV_HEADER, SWEEP_CSV_HEADER};
