//! Iterative tightening: solve the augmented KKT system at a soft sigmoid
//! strictness, then keep doubling the strictness and re-solving from the
//! previous solution until the desired strictness is passed or a solve
//! fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AugmentedGame, ConstraintMode, MixProfile, StrategyProfile};
use crate::kkt::{assemble_augmented_mcp, assemble_augmented_mcp_with, StrategyRows, VariableLayout};
use crate::mcp::{solve, SolveOutcome, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TighteningConfig {
    pub omega_start: f64,
    pub omega_desired: f64,
    /// Runs that stop below this strictness count as failures.
    pub omega_min_accept: f64,
    pub solver: SolverOptions,
    /// Row scaling used while solving; conditional solutions are then
    /// checked against the weighted system.
    pub strategy_rows: StrategyRows,
}

impl Default for TighteningConfig {
    fn default() -> Self {
        Self {
            omega_start: 1.0,
            omega_desired: 64.0,
            omega_min_accept: 10.0,
            solver: SolverOptions::default(),
            strategy_rows: StrategyRows::Conditional,
        }
    }
}

impl TighteningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_start > 0.0 && self.omega_start <= self.omega_desired) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < omega_start <= omega_desired, got {} and {}",
                self.omega_start, self.omega_desired
            )));
        }
        if !(self.omega_min_accept <= self.omega_desired) {
            return Err(Error::InvalidArgument(
                "omega_min_accept exceeds omega_desired".into(),
            ));
        }
        self.solver.validate()
    }

    /// Strictness values visited when every solve succeeds.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut w = self.omega_start;
        loop {
            out.push(w);
            w *= 2.0;
            if w >= 2.0 * self.omega_desired {
                break;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionStatus {
    Solved,
    FailedAtOmega,
}

/// The converged point at one strictness stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub omega: f64,
    pub x: MixProfile,
    pub s: StrategyProfile,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x: MixProfile,
    pub s: StrategyProfile,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub omega_reached: f64,
    pub status: SolutionStatus,
    /// Converged stages in schedule order.
    pub stages: Vec<Stage>,
    pub layout: VariableLayout,
}

impl Solution {
    pub fn solved(&self) -> bool {
        self.status == SolutionStatus::Solved
    }

    /// Flat MCP point for this solution.
    pub fn point(&self) -> Vec<f64> {
        self.layout
            .pack(self.x.weights(), Some(&self.s), &self.lambda, &self.gamma)
            .expect("solution matches its own layout")
    }

    fn from_point(
        layout: &VariableLayout,
        z: &[f64],
        omega_reached: f64,
        status: SolutionStatus,
        stages: Vec<Stage>,
    ) -> Self {
        Self {
            x: MixProfile(layout.mix(z)),
            s: layout.strategies(z),
            lambda: layout.lambdas(z),
            gamma: layout.gammas(z),
            omega_reached,
            status,
            stages,
            layout: layout.clone(),
        }
    }
}

fn stage_from(layout: &VariableLayout, omega: f64, out: &SolveOutcome) -> Stage {
    Stage {
        omega,
        x: MixProfile(layout.mix(&out.z)),
        s: layout.strategies(&out.z),
        residual_norm: out.residual_norm,
        iterations: out.iterations,
    }
}

/// Solves one stage; with conditional rows the result must also satisfy
/// the weighted system, polishing it there if needed. When the conditional
/// system fails, the weighted system is solved directly.
fn solve_stage(
    game: &AugmentedGame,
    omega: f64,
    z: &[f64],
    cfg: &TighteningConfig,
    seed: u64,
) -> Result<SolveOutcome> {
    let opts = SolverOptions { seed, ..cfg.solver };
    let weighted = assemble_augmented_mcp(game, omega)?;
    if cfg.strategy_rows == StrategyRows::Weighted {
        return solve(&weighted, z, &opts);
    }
    let scaled = assemble_augmented_mcp_with(game, omega, cfg.strategy_rows)?;
    let out = solve(&scaled, z, &opts)?;
    if !out.converged() {
        let direct = solve(&weighted, z, &opts)?;
        return Ok(SolveOutcome {
            iterations: out.iterations + direct.iterations,
            ..direct
        });
    }
    let polished = solve(&weighted, &out.z, &SolverOptions { max_restarts: 0, ..opts })?;
    Ok(SolveOutcome {
        iterations: out.iterations + polished.iterations,
        ..polished
    })
}

/// Runs the doubling schedule from `(x0, s0)` with zero initial duals.
///
/// Expectation-mode games have no strictness to tighten and are solved once;
/// a success reports `omega_desired` as the strictness reached.
pub fn iterative_tighten(
    game: &AugmentedGame,
    x0: &MixProfile,
    s0: &StrategyProfile,
    cfg: &TighteningConfig,
) -> Result<Solution> {
    cfg.validate()?;
    game.check_mix(x0)?;
    game.check_strategies(s0)?;

    let first = assemble_augmented_mcp(game, cfg.omega_start)?;
    let layout = first.layout.clone().expect("augmented layout");
    let n_duals = layout.constraint_duals.len();
    let mut z = layout.pack(
        x0.weights(),
        Some(s0),
        &vec![0.0; game.n_players()],
        &vec![0.0; n_duals],
    )?;
    let mut stages = Vec::new();

    if game.indicator.mode == ConstraintMode::Expectation {
        let out = solve_stage(game, cfg.omega_start, &z, cfg, cfg.solver.seed)?;
        if out.converged() {
            stages.push(stage_from(&layout, cfg.omega_desired, &out));
            return Ok(Solution::from_point(
                &layout,
                &out.z,
                cfg.omega_desired,
                SolutionStatus::Solved,
                stages,
            ));
        }
        return Ok(Solution::from_point(&layout, &z, 0.0, SolutionStatus::FailedAtOmega, stages));
    }

    let mut reached = 0.0;
    for (n, omega) in cfg.schedule().into_iter().enumerate() {
        let out = solve_stage(game, omega, &z, cfg, cfg.solver.seed.wrapping_add(n as u64))?;
        if !out.converged() {
            break;
        }
        stages.push(stage_from(&layout, omega, &out));
        z = out.z;
        reached = omega;
    }
    let status = if reached > 0.0 && reached >= cfg.omega_min_accept {
        SolutionStatus::Solved
    } else {
        SolutionStatus::FailedAtOmega
    };
    Ok(Solution::from_point(&layout, &z, reached, status, stages))
}
