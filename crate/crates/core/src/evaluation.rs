//! Post-solve quantities: exact feasibility under the strict indicator,
//! expected costs, support statistics, KKT residuals and a sampled
//! improvement probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AugmentedGame, IndicatorConfig, MixProfile, SmoothFn, StrategyProfile};
use crate::kkt::assemble_augmented_mcp;
use crate::mcp::reformulated_residual;
use crate::tensor::{fill_from, JointIndices};
use crate::tightening::Solution;

/// Weights at or below this are treated as numerically zero.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-3;

pub const DEFAULT_PROBE_TRIALS: usize = 1000;

fn joint_point(s: &StrategyProfile, k: &[usize], buf: &mut Vec<f64>) {
    buf.clear();
    for (p, &kp) in k.iter().enumerate() {
        buf.extend_from_slice(&s.0[p][kp]);
    }
}

fn joint_weight(x: &MixProfile, k: &[usize]) -> f64 {
    k.iter().enumerate().map(|(p, &kp)| x.0[p][kp]).product()
}

/// Probability that the realized joint pure strategy satisfies `g >= 0`.
pub fn realized_feasibility(x: &MixProfile, s: &StrategyProfile, g: &SmoothFn) -> f64 {
    let mut buf = Vec::new();
    JointIndices::new(&x.counts())
        .filter_map(|k| {
            joint_point(s, &k, &mut buf);
            (g.value(&buf) >= 0.0).then(|| joint_weight(x, &k))
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

pub fn expected_cost(x: &MixProfile, s: &StrategyProfile, f: &SmoothFn) -> Result<f64> {
    let mut joint = Vec::new();
    let a = fill_from(&s.0, |pts| {
        joint.clear();
        for p in pts {
            joint.extend_from_slice(p);
        }
        f.value(&joint)
    })?;
    a.full_contract(x.weights())
}

/// Smallest distance between players `a` and `b` over joint strategies
/// whose probability exceeds `threshold`.
pub fn min_supported_distance(
    x: &MixProfile,
    s: &StrategyProfile,
    pair: (usize, usize),
    threshold: f64,
) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "support threshold must be in (0, 1), got {threshold}"
        )));
    }
    let n = x.0.len();
    if pair.0 >= n || pair.1 >= n {
        return Err(Error::Index {
            what: "player",
            index: pair.0.max(pair.1),
            len: n,
        });
    }
    JointIndices::new(&x.counts())
        .filter(|k| joint_weight(x, k) > threshold)
        .map(|k| {
            let (p, q) = (&s.0[pair.0][k[pair.0]], &s.0[pair.1][k[pair.1]]);
            p.iter().zip(q).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
        })
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::InvalidArgument("no joint strategy above the support threshold".into()))
}

/// Infinity norm of the reformulated KKT residual at the solution.
pub fn kkt_residual(solution: &Solution, game: &AugmentedGame, omega: f64) -> Result<f64> {
    let mcp = assemble_augmented_mcp(game, omega)?;
    let layout = mcp.layout.as_ref().expect("augmented layout");
    let z = layout.pack(
        solution.x.weights(),
        Some(&solution.s),
        &solution.lambda,
        &solution.gamma,
    )?;
    Ok(reformulated_residual(&mcp, &z)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs())))
}

/// Soft satisfaction of every constraint player `i` owns, against its
/// thresholds, with `slack` tolerance.
fn soft_feasible(
    game: &AugmentedGame,
    indicator: &IndicatorConfig,
    x: &MixProfile,
    s: &StrategyProfile,
    player: usize,
    slack: f64,
) -> Result<bool> {
    for (j, eps) in game.owned(player) {
        let g = &game.constraints[j].1;
        let mut joint = Vec::new();
        let q = fill_from(&s.0, |pts| {
            joint.clear();
            for p in pts {
                joint.extend_from_slice(p);
            }
            indicator.apply(g.value(&joint))
        })?;
        if q.full_contract(x.weights())? < eps - slack {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn dirichlet_one(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = v.iter().sum();
    v.into_iter().map(|a| a / sum).collect()
}

/// Samples unilateral deviations for each player (weights moved toward a
/// random simplex point, strategies nudged inside the box) and returns the
/// largest cost decrease among deviations that keep the player's soft
/// constraints satisfied. Zero means no improvement was found.
pub fn improvement_probe(
    solution: &Solution,
    game: &AugmentedGame,
    omega: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("probe needs at least one trial".into()));
    }
    let indicator = game.indicator.with_strictness(omega)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    // deviations may use the solver's own feasibility tolerance
    let slack = 1e-8;
    for i in 0..game.n_players() {
        let base = expected_cost(&solution.x, &solution.s, &game.costs[i])?;
        for t in 0..trials {
            let mut x = solution.x.clone();
            let mut s = solution.s.clone();
            let kind = t % 3;
            if kind != 1 {
                let step = rng.random_range(0.0..=1.0);
                let y = dirichlet_one(&mut rng, game.counts[i]);
                for (w, target) in x.0[i].iter_mut().zip(&y) {
                    *w = (1.0 - step) * *w + step * target;
                }
            }
            if kind != 0 {
                let scale = [1e-3, 1e-2, 1e-1, 0.5][rng.random_range(0..4)];
                let b = &game.boxes[i];
                for point in &mut s.0[i] {
                    for (c, v) in point.iter_mut().enumerate() {
                        *v = (*v + rng.random_range(-scale..=scale)).clamp(b.lower[c], b.upper[c]);
                    }
                }
            }
            if !soft_feasible(game, &indicator, &x, &s, i, slack)? {
                continue;
            }
            let cost = expected_cost(&x, &s, &game.costs[i])?;
            best = best.max(base - cost);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub expected_costs: Vec<f64>,
    pub feasibility: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub support_sizes: Vec<usize>,
    /// One entry per constraint whose player pair is known.
    pub min_distances: Vec<Option<f64>>,
    pub kkt_residual: f64,
    pub improvement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOptions {
    pub support_threshold: f64,
    /// Zero skips the improvement probe.
    pub probe_trials: usize,
    pub probe_seed: u64,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            support_threshold: DEFAULT_SUPPORT_THRESHOLD,
            probe_trials: DEFAULT_PROBE_TRIALS,
            probe_seed: 0,
        }
    }
}

/// Full report for a solution. `pairs[j]` names the players whose distance
/// constraint `j` measures, when known.
pub fn evaluate(
    game: &AugmentedGame,
    solution: &Solution,
    pairs: &[Option<(usize, usize)>],
    opts: &EvaluationOptions,
) -> Result<EvaluationReport> {
    let (x, s) = (&solution.x, &solution.s);
    let expected_costs = game
        .costs
        .iter()
        .map(|f| expected_cost(x, s, f))
        .collect::<Result<_>>()?;
    let feasibility = game
        .constraints
        .iter()
        .map(|(_, g)| realized_feasibility(x, s, g))
        .collect();
    let support_sizes = x
        .0
        .iter()
        .map(|w| w.iter().filter(|&&v| v > opts.support_threshold).count().max(1))
        .collect();
    let min_distances = (0..game.constraints.len())
        .map(|j| {
            pairs
                .get(j)
                .copied()
                .flatten()
                .map(|p| min_supported_distance(x, s, p, opts.support_threshold))
                .transpose()
        })
        .collect::<Result<_>>()?;
    let omega = if solution.omega_reached > 0.0 {
        solution.omega_reached
    } else {
        1.0
    };
    let improvement = if opts.probe_trials > 0 {
        Some(improvement_probe(solution, game, omega, opts.probe_trials, opts.probe_seed)?)
    } else {
        None
    };
    Ok(EvaluationReport {
        expected_costs,
        feasibility,
        weights: x.0.clone(),
        support_sizes,
        min_distances,
        kkt_residual: kkt_residual(solution, game, omega)?,
        improvement,
    })
}
