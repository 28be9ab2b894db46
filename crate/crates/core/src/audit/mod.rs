//! Registry of the weighted Korn, Hardy and harmonic-separation
//! inequalities, with evaluators and randomized stress tests.

mod evaluate;
mod registry;
mod stress;

pub use evaluate::{
    evaluate, AlternateReading, AuditInput, AuditParams, InequalityReport, DEGENERATE_TOL, HARMONIC_TOL, MIN_SLACK,
    TRACE_TOL,
};
pub use registry::{InequalityId, InputClass};
pub use stress::{
    calibrate, random_input, stress_test, write_reports_csv, Calibration, StressSetup, StressSummary,
    CALIBRATION_MARGIN, REPORT_CSV_HEADER,
};
