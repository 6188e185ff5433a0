//! Tensor games with tensor constraints, and their strategy-augmented form
//! where the tensors are generated from continuous pure strategies.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{fill_from, DenseTensor};

/// Sigmoid arguments are clamped to this magnitude before exponentiation.
pub const SIGMOID_CLAMP: f64 = 500.0;

/// Tolerance for simplex and box membership checks.
pub const PROFILE_TOL: f64 = 1e-8;

/// A player that respects a constraint, with its own threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ownership {
    pub player: usize,
    pub threshold: f64,
}

/// Which players respect a constraint and at what threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub owners: Vec<Ownership>,
}

impl ConstraintSpec {
    pub fn new(owners: Vec<Ownership>) -> Self {
        Self { owners }
    }

    /// Every listed player shares the same threshold.
    pub fn shared(players: &[usize], threshold: f64) -> Self {
        Self {
            owners: players
                .iter()
                .map(|&player| Ownership { player, threshold })
                .collect(),
        }
    }

    /// Copy with every owner's threshold replaced.
    pub fn with_threshold(&self, threshold: f64) -> Self {
        Self {
            owners: self
                .owners
                .iter()
                .map(|o| Ownership {
                    player: o.player,
                    threshold,
                })
                .collect(),
        }
    }

    pub fn threshold_for(&self, player: usize) -> Option<f64> {
        self.owners
            .iter()
            .find(|o| o.player == player)
            .map(|o| o.threshold)
    }

    fn validate(&self, n_players: usize, mode: ConstraintMode) -> Result<()> {
        if self.owners.is_empty() {
            return Err(Error::InvalidArgument("constraint has no owners".into()));
        }
        for (a, o) in self.owners.iter().enumerate() {
            if o.player >= n_players {
                return Err(Error::Index {
                    what: "constraint owner",
                    index: o.player,
                    len: n_players,
                });
            }
            if self.owners[..a].iter().any(|p| p.player == o.player) {
                return Err(Error::InvalidArgument(format!(
                    "player {} owns the same constraint twice",
                    o.player
                )));
            }
            if !o.threshold.is_finite() {
                return Err(Error::InvalidArgument("non-finite threshold".into()));
            }
            if mode == ConstraintMode::Chance && !(0.0..=1.0).contains(&o.threshold) {
                return Err(Error::InvalidArgument(format!(
                    "chance threshold {} outside [0, 1]",
                    o.threshold
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Tensor entries approximate the feasibility indicator.
    Chance,
    /// Tensor entries are raw constraint values.
    Expectation,
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintMode::Chance => f.write_str("chance"),
            ConstraintMode::Expectation => f.write_str("expectation"),
        }
    }
}

/// The map from a raw constraint value to a tensor entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorConfig {
    pub mode: ConstraintMode,
    /// Sigmoid strictness; ignored in expectation mode.
    pub strictness: f64,
}

impl IndicatorConfig {
    pub fn chance(strictness: f64) -> Result<Self> {
        if !(strictness > 0.0 && strictness.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "strictness must be positive, got {strictness}"
            )));
        }
        Ok(Self {
            mode: ConstraintMode::Chance,
            strictness,
        })
    }

    pub fn expectation() -> Self {
        Self {
            mode: ConstraintMode::Expectation,
            strictness: 1.0,
        }
    }

    pub fn with_strictness(self, strictness: f64) -> Result<Self> {
        match self.mode {
            ConstraintMode::Chance => Self::chance(strictness),
            ConstraintMode::Expectation => Ok(self),
        }
    }

    /// `rho(g)`: `sigma(omega * g)` in chance mode, `g` in expectation mode.
    pub fn apply(&self, g: f64) -> f64 {
        match self.mode {
            ConstraintMode::Chance => sigmoid(self.strictness * g),
            ConstraintMode::Expectation => g,
        }
    }

    /// First and second derivatives of [`apply`](Self::apply) at `g`.
    pub fn derivatives(&self, g: f64) -> (f64, f64) {
        match self.mode {
            ConstraintMode::Chance => {
                let w = self.strictness;
                let s = sigmoid(w * g);
                let d1 = w * s * (1.0 - s);
                (d1, w * d1 * (1.0 - 2.0 * s))
            }
            ConstraintMode::Expectation => (1.0, 0.0),
        }
    }
}

/// `1 / (1 + exp(-v))` with the argument clamped to `+-SIGMOID_CLAMP`.
pub fn sigmoid(v: f64) -> f64 {
    let v = v.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn indicator_apply(cfg: &IndicatorConfig, g: f64) -> f64 {
    cfg.apply(g)
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VecFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A real function of the concatenated joint pure strategy (player 0's
/// point, then player 1's, ...) with optional analytic derivatives.
///
/// Hessians are `D x D` row-major. When no Hessian is supplied it is formed
/// by central differences of the gradient.
#[derive(Clone)]
pub struct SmoothFn {
    value: Arc<ValueFn>,
    gradient: Option<Arc<VecFn>>,
    hessian: Option<Arc<VecFn>>,
    constant_hessian: Option<Arc<[f64]>>,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn")
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl SmoothFn {
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            constant_hessian: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self.constant_hessian = None;
        self
    }

    /// Hessian that does not depend on the point, as for quadratics.
    pub fn with_constant_hessian(mut self, h: Vec<f64>) -> Self {
        let h: Arc<[f64]> = h.into();
        let shared = Arc::clone(&h);
        self.hessian = Some(Arc::new(move |_| shared.to_vec()));
        self.constant_hessian = Some(h);
        self
    }

    pub fn constant_hessian(&self) -> Option<&[f64]> {
        self.constant_hessian.as_deref()
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        (self.value)(s)
    }

    /// Panics if no gradient was supplied; assembly checks this up front.
    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        (self.gradient.as_ref().expect("SmoothFn without gradient"))(s)
    }

    pub fn hessian(&self, s: &[f64]) -> Vec<f64> {
        if let Some(h) = &self.hessian {
            return h(s);
        }
        let n = s.len();
        let step = 1e-6;
        let mut out = vec![0.0; n * n];
        let mut p = s.to_vec();
        for c in 0..n {
            p[c] = s[c] + step;
            let gp = self.gradient(&p);
            p[c] = s[c] - step;
            let gm = self.gradient(&p);
            p[c] = s[c];
            for r in 0..n {
                out[r * n + c] = (gp[r] - gm[r]) / (2.0 * step);
            }
        }
        out
    }
}

/// Mixing weights, one simplex vector per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixProfile(pub Vec<Vec<f64>>);

impl MixProfile {
    pub fn new(x: Vec<Vec<f64>>) -> Result<Self> {
        for (i, xi) in x.iter().enumerate() {
            if xi.is_empty() {
                return Err(Error::Shape(format!("player {i} has no strategies")));
            }
            if xi.iter().any(|&v| !(v >= -PROFILE_TOL)) {
                return Err(Error::InvalidArgument(format!(
                    "player {i} has a negative weight"
                )));
            }
            let sum: f64 = xi.iter().sum();
            if (sum - 1.0).abs() > PROFILE_TOL {
                return Err(Error::InvalidArgument(format!(
                    "player {i} weights sum to {sum}"
                )));
            }
        }
        Ok(Self(x))
    }

    pub fn uniform(m: &[usize]) -> Self {
        Self(m.iter().map(|&mi| vec![1.0 / mi as f64; mi]).collect())
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn counts(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }
}

/// Continuous pure strategies: for each player, `m_i` points in `R^{d_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile(pub Vec<Vec<Vec<f64>>>);

impl StrategyProfile {
    pub fn points(&self) -> &[Vec<Vec<f64>>] {
        &self.0
    }

    pub fn counts(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }
}

/// Per-coordinate bounds on one player's pure strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StrategyBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Shape("box bounds length mismatch".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidArgument(format!(
                    "box needs finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval on every coordinate.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Distance from `p` to the nearest face of the box.
    pub fn boundary_distance(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (v - l).abs().min((u - v).abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A tensor game with tensor constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGame {
    pub mode: ConstraintMode,
    pub costs: Vec<DenseTensor>,
    pub constraints: Vec<(ConstraintSpec, DenseTensor)>,
}

impl TensorGame {
    pub fn new(
        mode: ConstraintMode,
        costs: Vec<DenseTensor>,
        constraints: Vec<(ConstraintSpec, DenseTensor)>,
    ) -> Result<Self> {
        let shape = costs
            .first()
            .ok_or_else(|| Error::Shape("game needs at least one player".into()))?
            .shape()
            .to_vec();
        if shape.len() != costs.len() {
            return Err(Error::Shape(format!(
                "{} players but cost tensors have {} axes",
                costs.len(),
                shape.len()
            )));
        }
        for (i, a) in costs.iter().enumerate() {
            if a.shape() != shape.as_slice() {
                return Err(Error::Shape(format!(
                    "cost tensor {i} has shape {:?}, expected {:?}",
                    a.shape(),
                    shape
                )));
            }
        }
        for (j, (spec, q)) in constraints.iter().enumerate() {
            if q.shape() != shape.as_slice() {
                return Err(Error::Shape(format!(
                    "constraint tensor {j} has shape {:?}, expected {:?}",
                    q.shape(),
                    shape
                )));
            }
            spec.validate(costs.len(), mode)?;
            if mode == ConstraintMode::Chance && q.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidArgument(format!(
                    "chance constraint tensor {j} has entries outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            mode,
            costs,
            constraints,
        })
    }

    pub fn n_players(&self) -> usize {
        self.costs.len()
    }

    pub fn counts(&self) -> &[usize] {
        self.costs[0].shape()
    }

    /// `(constraint index, threshold)` for every constraint player `i` owns.
    pub fn owned(&self, player: usize) -> Vec<(usize, f64)> {
        owned_by(self.constraints.iter().map(|(s, _)| s), player)
    }

    /// `Q_j[.]x`: in chance mode, the probability constraint `j` holds.
    pub fn constraint_satisfaction(&self, x: &MixProfile, j: usize) -> Result<f64> {
        let (_, q) = self
            .constraints
            .get(j)
            .ok_or(Error::UnknownConstraint(j))?;
        q.full_contract(x.weights())
    }

    pub fn expected_cost(&self, x: &MixProfile, player: usize) -> Result<f64> {
        self.costs
            .get(player)
            .ok_or(Error::Index {
                what: "player",
                index: player,
                len: self.costs.len(),
            })?
            .full_contract(x.weights())
    }
}

pub fn constraint_satisfaction(game: &TensorGame, x: &MixProfile, j: usize) -> Result<f64> {
    game.constraint_satisfaction(x, j)
}

pub(crate) fn owned_by<'a>(
    specs: impl Iterator<Item = &'a ConstraintSpec>,
    player: usize,
) -> Vec<(usize, f64)> {
    specs
        .enumerate()
        .filter_map(|(j, s)| s.threshold_for(player).map(|eps| (j, eps)))
        .collect()
}

/// A game whose cost and constraint tensors are generated from continuous
/// pure strategies that are themselves decision variables.
#[derive(Debug, Clone)]
pub struct AugmentedGame {
    pub counts: Vec<usize>,
    pub boxes: Vec<StrategyBox>,
    pub costs: Vec<SmoothFn>,
    pub constraints: Vec<(ConstraintSpec, SmoothFn)>,
    pub indicator: IndicatorConfig,
}

impl AugmentedGame {
    pub fn new(
        counts: Vec<usize>,
        boxes: Vec<StrategyBox>,
        costs: Vec<SmoothFn>,
        constraints: Vec<(ConstraintSpec, SmoothFn)>,
        indicator: IndicatorConfig,
    ) -> Result<Self> {
        let n = counts.len();
        if n == 0 || n > crate::tensor::MAX_AXES {
            return Err(Error::Shape(format!("unsupported player count {n}")));
        }
        if counts.contains(&0) {
            return Err(Error::Shape("every player needs a strategy".into()));
        }
        if boxes.len() != n || costs.len() != n {
            return Err(Error::Shape(format!(
                "{n} players but {} boxes and {} cost functions",
                boxes.len(),
                costs.len()
            )));
        }
        for (spec, _) in &constraints {
            spec.validate(n, indicator.mode)?;
        }
        Ok(Self {
            counts,
            boxes,
            costs,
            constraints,
            indicator,
        })
    }

    pub fn n_players(&self) -> usize {
        self.counts.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.boxes.iter().map(StrategyBox::dim).collect()
    }

    /// Offset of each player's coordinates inside a joint point.
    pub fn joint_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.n_players() + 1);
        let mut acc = 0;
        off.push(0);
        for b in &self.boxes {
            acc += b.dim();
            off.push(acc);
        }
        off
    }

    pub fn owned(&self, player: usize) -> Vec<(usize, f64)> {
        owned_by(self.constraints.iter().map(|(s, _)| s), player)
    }

    /// Copy with every constraint threshold set to `threshold`.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        let mut g = self.clone();
        for (spec, _) in &mut g.constraints {
            *spec = spec.with_threshold(threshold);
            spec.validate(g.counts.len(), g.indicator.mode)?;
        }
        Ok(g)
    }

    pub fn with_indicator(&self, indicator: IndicatorConfig) -> Result<Self> {
        let mut g = self.clone();
        g.indicator = indicator;
        for (spec, _) in &g.constraints {
            spec.validate(g.counts.len(), indicator.mode)?;
        }
        Ok(g)
    }

    pub fn check_strategies(&self, s: &StrategyProfile) -> Result<()> {
        if s.0.len() != self.n_players() {
            return Err(Error::Shape(format!(
                "strategy profile has {} players, game has {}",
                s.0.len(),
                self.n_players()
            )));
        }
        for (i, (pts, b)) in s.0.iter().zip(&self.boxes).enumerate() {
            if pts.len() != self.counts[i] {
                return Err(Error::Shape(format!(
                    "player {i} has {} strategies, expected {}",
                    pts.len(),
                    self.counts[i]
                )));
            }
            if let Some(p) = pts.iter().find(|p| p.len() != b.dim()) {
                return Err(Error::Shape(format!(
                    "player {i} strategy has dimension {}, expected {}",
                    p.len(),
                    b.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn check_mix(&self, x: &MixProfile) -> Result<()> {
        if x.counts() != self.counts {
            return Err(Error::Shape(format!(
                "mix profile counts {:?} do not match game {:?}",
                x.counts(),
                self.counts
            )));
        }
        Ok(())
    }

    /// Builds the tensor game at the given strategies using the game's own
    /// indicator.
    pub fn lift(&self, s: &StrategyProfile) -> Result<TensorGame> {
        self.lift_with(s, &self.indicator)
    }

    pub fn lift_with(&self, s: &StrategyProfile, indicator: &IndicatorConfig) -> Result<TensorGame> {
        self.check_strategies(s)?;
        let mut joint = Vec::new();
        let mut eval = |f: &SmoothFn, pts: &[&[f64]]| {
            joint.clear();
            for p in pts {
                joint.extend_from_slice(p);
            }
            f.value(&joint)
        };
        let costs = self
            .costs
            .iter()
            .map(|f| fill_from(&s.0, |pts| eval(f, pts)))
            .collect::<Result<Vec<_>>>()?;
        let constraints = self
            .constraints
            .iter()
            .map(|(spec, g)| {
                fill_from(&s.0, |pts| indicator.apply(eval(g, pts))).map(|q| (spec.clone(), q))
            })
            .collect::<Result<Vec<_>>>()?;
        TensorGame::new(indicator.mode, costs, constraints)
    }
}

pub fn lift(game: &AugmentedGame, s: &StrategyProfile) -> Result<TensorGame> {
    game.lift(s)
}
