//! Experiment configuration, seeded parallel Monte Carlo runs, CSV output
//! and verification suites.

mod csv;
mod run;
mod spec;
pub mod verify;

pub use csv::{emit_csv, format_sig, render_csv, CSV_HEADER};
pub use run::{run_experiment, ExperimentResult, ResultRow, MAX_INFEASIBLE_FRACTION};
pub use spec::{BitMode, ExperimentSpec, Scheme, MAX_JOINT_BITS};
