//! Applications, scenarios, sweeps and result aggregation.

pub mod apps;
pub mod config;
pub mod formulas;
pub mod scenario;

pub use apps::{
    bqc_ideal_p1, build_bqc_app, build_rotation_app, build_scenario1_local, build_scenario2_local, pad_ql_blocks,
    BqcApp, LocalGate, RotationApp,
};
pub use config::Config;
pub use formulas::{formula_report, FormulaLine};
pub use scenario::{
    build_run, mean_se, run_sweep, success_improvement, write_csv, Comparison, Hardware, Pipelines, PointDelta,
    RoleStats, RunSetup, ScenarioKind, ScenarioSpec, SweepParam, SweepPoint, SweepResult, DEFAULT_SEEDS,
    FIDELITY_SWEEP,
};

use crate::compiler::CompileError;
use crate::network::NetworkError;
use crate::runtime::SimError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("sweep value {value}, seed {seed:#x}, run {run}: {source}")]
    Run { value: f64, seed: u64, run: usize, source: Box<ExperimentError> },
    #[error("sweep grids or program roles do not match")]
    GridMismatch,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
