//! Experiment orchestration: configuration, seeded batch runs, theory-versus-sample
//! comparison and report files.

pub mod config;
pub mod kernel_check;
pub mod report;
pub mod run;
pub mod seeds;
pub mod theory;

pub use config::{Ensemble, EnsembleKind, ExperimentConfig};
pub use report::{emit_convergence, emit_report, emit_samples};
pub use run::{
    build_systems, convergence_study, run_at, run_experiment, sample_and_solve, solve_system,
    ComparisonReport, ConvergenceStudy, Metrics,
};
pub use theory::{theory, Theory};
