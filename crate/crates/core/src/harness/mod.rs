//! Experiment runner: error-rate estimation, budget sweeps and printed tables.

pub mod config;
pub mod report;
pub mod simulate;
pub mod sweep;

pub use config::{resolve, ExperimentSpec, Hypothesis, Overrides, ProtocolKind, Resolved};
pub use report::{print_bounds, print_params, BoundsReport, ParamsReport};
pub use simulate::{estimate_error_rates, estimate_with_workers, run_trial, TrialContext, TrialReport};
pub use sweep::{sweep_phase_transition, sweep_with_workers, write_csv, SweepConfig, SweepRow, SweepSpec};
