//! Simulation harness: ground-truth oracle, synthetic query stream, the
//! step loop, and the experiment protocols built on top of it.

pub mod experiments;
pub mod export;
pub mod oracle;
pub mod pareto;
pub mod runner;
pub mod stream;

pub use experiments::{
    measure_overhead, run_feature_ablation, run_lambda_sweep, run_model_addition,
    AblationRow, AdditionOutcome, LambdaSweepResult, OverheadReport,
};
pub use oracle::{default_oracle, ContextCell, ModelOracle, OracleSpec};
pub use pareto::{pareto_front, ParetoPoint};
pub use runner::{
    run_baseline, run_policy, BaselineKind, DecisionRecord, ExperimentResult, SimConfig,
};
pub use stream::{Query, QueryStream, StreamConfig};
