//! Mixed-strategy generalized Nash equilibria for N-player tensor games with
//! tensor constraints.
//!
//! Pure strategies are continuous decision variables alongside the mixing
//! weights. Chance constraints are softened with a sigmoid and tightened by
//! repeated solves at doubling strictness.

pub mod error;
pub mod evaluation;
pub mod game;
pub mod harness;
pub mod kkt;
pub mod mcp;
pub mod scenarios;
pub mod tensor;
pub mod tightening;

pub use error::{Error, Result};
pub use evaluation::{
    evaluate, expected_cost, improvement_probe, kkt_residual, min_supported_distance,
    realized_feasibility, EvaluationOptions, EvaluationReport,
};
pub use game::{
    constraint_satisfaction, indicator_apply, lift, AugmentedGame, ConstraintMode, ConstraintSpec,
    IndicatorConfig, MixProfile, Ownership, SmoothFn, StrategyBox, StrategyProfile, TensorGame,
};
pub use kkt::{assemble_augmented_mcp, assemble_weight_mcp, McpInstance, VariableLayout};
pub use mcp::{reformulated_residual, solve, SolveOutcome, SolveStatus, SolverOptions};
pub use scenarios::{
    hog_poacher_ranger, n_player_chain, stationary_hog_variant, ChainParams, HprParams, Scenario,
    StationaryHogParams,
};
pub use tensor::{fill_from, DenseTensor, JointIndex};
pub use tightening::{iterative_tighten, Solution, SolutionStatus, TighteningConfig};
pub use harness::{
    bench_chain, run_bulk, run_trial, spearman, sweep_epsilon, sweep_omega, BenchRow, BulkResult,
    ExperimentConfig, OmegaRow, Summary, TrialRecord,
};
