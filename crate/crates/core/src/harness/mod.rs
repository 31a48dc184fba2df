//! Seeded Monte-Carlo sweeps, figure presets, CSV tables and validation
//! suites.
//!
//! Every trial draws from its own ChaCha stream keyed by the master seed, the
//! sweep point and the trial index, and trial results are reduced in trial
//! order with pairwise summation. Tables are therefore identical for any
//! number of worker threads.

mod config;
mod figures;
mod run;
mod table;
mod validate;

pub use config::{CsiMode, EstimatorPath, ExperimentSpec, RunOverrides, SweepAxis, SystemConfig};
pub use figures::{figure_jobs, reproduce_figure, run_job, FigureJob, FIGURES};
pub use run::{config_hash, run_monte_carlo, run_monte_carlo_with, trial_rng};
pub use table::{ResultRow, ResultTable, TableMeta, CSV_HEADER};
pub use validate::{validate, Check, Suite, ValidationReport};
