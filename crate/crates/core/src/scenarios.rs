//! Benchmark games: hog-poacher-ranger, its N-player chain, and the
//! stationary-hog variant with a three-strategy poacher.
//!
//! All cost and constraint functions are signed squared distances between
//! two players' planar points, so gradients and Hessians are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AugmentedGame, ConstraintSpec, IndicatorConfig, SmoothFn, StrategyBox};

const PLANE: usize = 2;

/// `scale * ||s_a - s_b||^2 + offset` over a joint point whose player `p`
/// occupies coordinates `offsets[p]..offsets[p + 1]`.
pub fn pair_distance(a: usize, b: usize, offsets: &[usize], scale: f64, offset: f64) -> SmoothFn {
    let (ra, rb) = (offsets[a]..offsets[a + 1], offsets[b]..offsets[b + 1]);
    let n = *offsets.last().unwrap();
    let (va, vb) = (ra.clone(), rb.clone());
    let (ga, gb) = (ra.clone(), rb.clone());
    SmoothFn::new(move |s| {
        scale
            * s[va.clone()]
                .iter()
                .zip(&s[vb.clone()])
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
            + offset
    })
    .with_gradient(move |s| {
        let mut g = vec![0.0; s.len()];
        for (ia, ib) in ga.clone().zip(gb.clone()) {
            let d = 2.0 * scale * (s[ia] - s[ib]);
            g[ia] += d;
            g[ib] -= d;
        }
        g
    })
    .with_constant_hessian({
        let mut h = vec![0.0; n * n];
        for (ia, ib) in ra.zip(rb) {
            h[ia * n + ia] += 2.0 * scale;
            h[ib * n + ib] += 2.0 * scale;
            h[ia * n + ib] -= 2.0 * scale;
            h[ib * n + ia] -= 2.0 * scale;
        }
        h
    })
}

/// `scale * ||s_a - anchor||^2 + offset`.
pub fn anchor_distance(
    a: usize,
    anchor: Vec<f64>,
    offsets: &[usize],
    scale: f64,
    offset: f64,
) -> SmoothFn {
    let ra = offsets[a]..offsets[a + 1];
    let n = *offsets.last().unwrap();
    let (va, ga) = (ra.clone(), ra.clone());
    let (av, ag) = (anchor.clone(), anchor);
    SmoothFn::new(move |s| {
        scale
            * s[va.clone()]
                .iter()
                .zip(&av)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
            + offset
    })
    .with_gradient(move |s| {
        let mut g = vec![0.0; s.len()];
        for (ia, c) in ga.clone().zip(&ag) {
            g[ia] = 2.0 * scale * (s[ia] - c);
        }
        g
    })
    .with_constant_hessian({
        let mut h = vec![0.0; n * n];
        for ia in ra {
            h[ia * n + ia] = 2.0 * scale;
        }
        h
    })
}

fn plane_offsets(n: usize) -> Vec<usize> {
    (0..=n).map(|p| p * PLANE).collect()
}

fn check_geometry(r: f64, lower: f64, upper: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if !(lower < upper) {
        return Err(Error::InvalidArgument(format!(
            "empty strategy box [{lower}, {upper}]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HprParams {
    /// Minimum poacher-ranger distance.
    pub r: f64,
    pub box_lower: f64,
    pub box_upper: f64,
    /// Strategy counts for hog, poacher, ranger.
    pub counts: [usize; 3],
}

impl Default for HprParams {
    fn default() -> Self {
        Self {
            r: 1.0,
            box_lower: -2.0,
            box_upper: 2.0,
            counts: [2, 2, 2],
        }
    }
}

/// Hog (0) flees the poacher, poacher (1) chases the hog while keeping at
/// least `r` from the ranger, ranger (2) chases the poacher.
pub fn hog_poacher_ranger(
    p: &HprParams,
    indicator: IndicatorConfig,
    threshold: f64,
) -> Result<AugmentedGame> {
    check_geometry(p.r, p.box_lower, p.box_upper)?;
    let off = plane_offsets(3);
    let costs = vec![
        pair_distance(0, 1, &off, -1.0, 0.0),
        pair_distance(0, 1, &off, 1.0, 0.0),
        pair_distance(1, 2, &off, 1.0, 0.0),
    ];
    let constraints = vec![(
        ConstraintSpec::shared(&[1], threshold),
        pair_distance(1, 2, &off, 1.0, -p.r * p.r),
    )];
    let boxes = (0..3)
        .map(|_| StrategyBox::cube(PLANE, p.box_lower, p.box_upper))
        .collect::<Result<_>>()?;
    AugmentedGame::new(p.counts.to_vec(), boxes, costs, constraints, indicator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_players: usize,
    pub strategies: usize,
    pub r: f64,
    pub box_lower: f64,
    pub box_upper: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            n_players: 3,
            strategies: 2,
            r: 1.0,
            box_lower: -2.0,
            box_upper: 2.0,
        }
    }
}

/// N-player chase: player 0 flees player 1, every later player chases its
/// predecessor, and players `1..N-1` keep at least `r` from their successor.
pub fn n_player_chain(
    p: &ChainParams,
    indicator: IndicatorConfig,
    threshold: f64,
) -> Result<AugmentedGame> {
    if p.n_players < 2 {
        return Err(Error::InvalidArgument(format!(
            "chain needs at least 2 players, got {}",
            p.n_players
        )));
    }
    if p.strategies == 0 {
        return Err(Error::InvalidArgument("chain needs at least 1 strategy".into()));
    }
    check_geometry(p.r, p.box_lower, p.box_upper)?;
    let n = p.n_players;
    let off = plane_offsets(n);
    let mut costs = vec![pair_distance(0, 1, &off, -1.0, 0.0)];
    costs.extend((1..n).map(|i| pair_distance(i, i - 1, &off, 1.0, 0.0)));
    let constraints = (1..n - 1)
        .map(|i| {
            (
                ConstraintSpec::shared(&[i], threshold),
                pair_distance(i, i + 1, &off, 1.0, -p.r * p.r),
            )
        })
        .collect();
    let boxes = (0..n)
        .map(|_| StrategyBox::cube(PLANE, p.box_lower, p.box_upper))
        .collect::<Result<_>>()?;
    AugmentedGame::new(vec![p.strategies; n], boxes, costs, constraints, indicator)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryHogParams {
    pub r: f64,
    pub box_lower: f64,
    pub box_upper: f64,
    pub hog: [f64; 2],
    /// Strategy counts for poacher and ranger.
    pub counts: [usize; 2],
}

impl Default for StationaryHogParams {
    fn default() -> Self {
        Self {
            r: 1.0,
            box_lower: -2.0,
            box_upper: 2.0,
            hog: [0.0, 0.0],
            counts: [3, 2],
        }
    }
}

/// Poacher (0) approaches a fixed hog position while keeping `r` from the
/// ranger (1), who chases the poacher.
pub fn stationary_hog_variant(
    p: &StationaryHogParams,
    indicator: IndicatorConfig,
    threshold: f64,
) -> Result<AugmentedGame> {
    check_geometry(p.r, p.box_lower, p.box_upper)?;
    let off = plane_offsets(2);
    let costs = vec![
        anchor_distance(0, p.hog.to_vec(), &off, 1.0, 0.0),
        pair_distance(0, 1, &off, 1.0, 0.0),
    ];
    let constraints = vec![(
        ConstraintSpec::shared(&[0], threshold),
        pair_distance(0, 1, &off, 1.0, -p.r * p.r),
    )];
    let boxes = (0..2)
        .map(|_| StrategyBox::cube(PLANE, p.box_lower, p.box_upper))
        .collect::<Result<_>>()?;
    AugmentedGame::new(p.counts.to_vec(), boxes, costs, constraints, indicator)
}

/// A named benchmark with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scenario {
    HogPoacherRanger(HprParams),
    Chain(ChainParams),
    StationaryHog(StationaryHogParams),
}

impl Scenario {
    pub fn build(&self, indicator: IndicatorConfig, threshold: f64) -> Result<AugmentedGame> {
        match self {
            Scenario::HogPoacherRanger(p) => hog_poacher_ranger(p, indicator, threshold),
            Scenario::Chain(p) => n_player_chain(p, indicator, threshold),
            Scenario::StationaryHog(p) => stationary_hog_variant(p, indicator, threshold),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::HogPoacherRanger(_) => "hpr",
            Scenario::Chain(_) => "chain",
            Scenario::StationaryHog(_) => "stationary_hog",
        }
    }

    /// The two players whose distance constraint `j` measures.
    pub fn constraint_pair(&self, j: usize) -> Option<(usize, usize)> {
        match self {
            Scenario::HogPoacherRanger(_) => (j == 0).then_some((1, 2)),
            Scenario::Chain(p) => (j + 2 < p.n_players).then_some((j + 1, j + 2)),
            Scenario::StationaryHog(_) => (j == 0).then_some((0, 1)),
        }
    }

    /// The player whose mixing the experiments report (the poacher).
    pub fn focus_player(&self) -> usize {
        match self {
            Scenario::HogPoacherRanger(_) | Scenario::Chain(_) => 1,
            Scenario::StationaryHog(_) => 0,
        }
    }
}
