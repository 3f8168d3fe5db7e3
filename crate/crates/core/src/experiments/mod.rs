//! Config-driven experiments composing graphs, operators, macroscopic
//! solvers and the particle simulator. Each run is a pure function of its
//! config and master seed.

pub mod config;
pub mod output;
pub mod presets;
pub mod runs;

pub use config::{ExperimentConfig, ExperimentKind, Model, RhoRule};
pub use runs::{
    run_check, run_finite_time, run_graph_diag, run_macro, run_noise_scaling, run_phase, run_stability, CheckResult,
    FiniteTimeResult, GraphDiagResult, MacroResult, NoiseResult, PhaseResult, StabilityResult,
};
