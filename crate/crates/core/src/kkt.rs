//! KKT conditions of tensor games as box-constrained mixed complementarity
//! problems.
//!
//! Variables are laid out as `[x_1..x_N | s_1..s_N | lambda_1..lambda_N |
//! gamma]` where the strategy block is empty for plain tensor games and
//! `gamma` holds one dual per (owner, constraint) pair, grouped by player.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AugmentedGame, IndicatorConfig, StrategyProfile, TensorGame};
use crate::tensor::JointIndices;

/// The dual attached to one player's copy of one constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSlot {
    pub player: usize,
    pub constraint: usize,
    pub threshold: f64,
    pub index: usize,
}

/// Where each block of the flat variable vector lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub counts: Vec<usize>,
    /// Strategy dimension per player; empty for weight-only problems.
    pub dims: Vec<usize>,
    pub weights: Vec<Range<usize>>,
    pub strategies: Vec<Range<usize>>,
    pub simplex_duals: Vec<usize>,
    pub constraint_duals: Vec<DualSlot>,
    pub len: usize,
}

impl VariableLayout {
    /// `owned[i]` lists `(constraint, threshold)` for player `i`.
    pub fn new(counts: &[usize], dims: Option<&[usize]>, owned: &[Vec<(usize, f64)>]) -> Self {
        let n = counts.len();
        let mut at = 0;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let weights = counts.iter().map(|&m| take(m)).collect();
        let strategies = (0..n)
            .map(|i| take(dims.map_or(0, |d| counts[i] * d[i])))
            .collect();
        let simplex_duals = (0..n).map(|_| take(1).start).collect();
        let mut constraint_duals = Vec::new();
        for (player, list) in owned.iter().enumerate() {
            for &(constraint, threshold) in list {
                constraint_duals.push(DualSlot {
                    player,
                    constraint,
                    threshold,
                    index: take(1).start,
                });
            }
        }
        Self {
            counts: counts.to_vec(),
            dims: dims.map(<[usize]>::to_vec).unwrap_or_default(),
            weights,
            strategies,
            simplex_duals,
            constraint_duals,
            len: at,
        }
    }

    pub fn n_players(&self) -> usize {
        self.counts.len()
    }

    pub fn augmented(&self) -> bool {
        !self.dims.is_empty()
    }

    /// Range of player `i`'s `k`-th strategy point.
    pub fn strategy_point(&self, i: usize, k: usize) -> Range<usize> {
        let d = self.dims[i];
        let start = self.strategies[i].start + k * d;
        start..start + d
    }

    pub fn duals_of(&self, player: usize) -> impl Iterator<Item = &DualSlot> {
        self.constraint_duals
            .iter()
            .filter(move |slot| slot.player == player)
    }

    pub fn mix(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.weights.iter().map(|r| z[r.clone()].to_vec()).collect()
    }

    pub fn strategies(&self, z: &[f64]) -> StrategyProfile {
        StrategyProfile(
            (0..self.n_players())
                .map(|i| {
                    (0..self.counts[i])
                        .map(|k| z[self.strategy_point(i, k)].to_vec())
                        .collect()
                })
                .collect(),
        )
    }

    pub fn lambdas(&self, z: &[f64]) -> Vec<f64> {
        self.simplex_duals.iter().map(|&a| z[a]).collect()
    }

    pub fn gammas(&self, z: &[f64]) -> Vec<f64> {
        self.constraint_duals.iter().map(|s| z[s.index]).collect()
    }

    /// Flattens a point; `s` is ignored for weight-only layouts.
    pub fn pack(
        &self,
        x: &[Vec<f64>],
        s: Option<&StrategyProfile>,
        lambda: &[f64],
        gamma: &[f64],
    ) -> Result<Vec<f64>> {
        if x.len() != self.n_players() || lambda.len() != self.n_players() {
            return Err(Error::Shape("player count mismatch while packing".into()));
        }
        if gamma.len() != self.constraint_duals.len() {
            return Err(Error::Shape(format!(
                "expected {} constraint duals, got {}",
                self.constraint_duals.len(),
                gamma.len()
            )));
        }
        let mut z = vec![0.0; self.len];
        for (i, r) in self.weights.iter().enumerate() {
            if x[i].len() != r.len() {
                return Err(Error::Shape(format!("player {i} weight length mismatch")));
            }
            z[r.clone()].copy_from_slice(&x[i]);
        }
        if self.augmented() {
            let s = s.ok_or_else(|| Error::Shape("augmented layout needs strategies".into()))?;
            for i in 0..self.n_players() {
                for k in 0..self.counts[i] {
                    let p = &s.0[i][k];
                    let r = self.strategy_point(i, k);
                    if p.len() != r.len() {
                        return Err(Error::Shape(format!("player {i} strategy dimension mismatch")));
                    }
                    z[r].copy_from_slice(p);
                }
            }
        }
        for (&a, &l) in self.simplex_duals.iter().zip(lambda) {
            z[a] = l;
        }
        for (slot, &g) in self.constraint_duals.iter().zip(gamma) {
            z[slot.index] = g;
        }
        Ok(z)
    }

    /// True for coordinates belonging to `x` or `s`.
    pub fn is_primal(&self, index: usize) -> bool {
        self.weights.iter().chain(&self.strategies).any(|r| r.contains(&index))
    }
}

/// Residual and Jacobian of a complementarity system.
pub trait ComplementaritySystem: Send + Sync {
    fn residual(&self, z: &[f64]) -> Vec<f64>;
    fn jacobian(&self, z: &[f64]) -> DMatrix<f64>;
}

struct FnSystem<F, J> {
    f: F,
    j: J,
}

impl<F, J> ComplementaritySystem for FnSystem<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
{
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        (self.f)(z)
    }
    fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        (self.j)(z)
    }
}

/// `F(z) perp lower <= z <= upper`.
#[derive(Clone)]
pub struct McpInstance {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub layout: Option<VariableLayout>,
    system: Arc<dyn ComplementaritySystem>,
}

impl std::fmt::Debug for McpInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("McpInstance")
            .field("dim", &self.dim())
            .field("layout", &self.layout)
            .finish()
    }
}

impl McpInstance {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        layout: Option<VariableLayout>,
        system: Arc<dyn ComplementaritySystem>,
    ) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape("bound vectors differ in length".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidArgument(format!(
                "bound {i}: lower {} exceeds upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self {
            lower,
            upper,
            layout,
            system,
        })
    }

    pub fn from_fns<F, J>(lower: Vec<f64>, upper: Vec<f64>, f: F, j: J) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::new(lower, upper, None, Arc::new(FnSystem { f, j }))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn residual(&self, z: &[f64]) -> Vec<f64> {
        self.system.residual(z)
    }

    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        self.system.jacobian(z)
    }

    pub fn project(&self, z: &mut [f64]) {
        for ((v, l), u) in z.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }
}

fn bounds_for(layout: &VariableLayout, boxes: Option<&[crate::game::StrategyBox]>) -> (Vec<f64>, Vec<f64>) {
    let mut lower = vec![f64::NEG_INFINITY; layout.len];
    let mut upper = vec![f64::INFINITY; layout.len];
    for r in &layout.weights {
        lower[r.clone()].fill(0.0);
    }
    if let Some(boxes) = boxes {
        for (i, b) in boxes.iter().enumerate() {
            for k in 0..layout.counts[i] {
                let r = layout.strategy_point(i, k);
                lower[r.clone()].copy_from_slice(&b.lower);
                upper[r].copy_from_slice(&b.upper);
            }
        }
    }
    for slot in &layout.constraint_duals {
        lower[slot.index] = 0.0;
    }
    (lower, upper)
}

/// Writes the `x`, `lambda` and `gamma` residual rows of a tensor game.
fn weight_residual(game: &TensorGame, layout: &VariableLayout, z: &[f64], out: &mut [f64]) {
    let x = layout.mix(z);
    for i in 0..game.n_players() {
        let lambda = z[layout.simplex_duals[i]];
        let mut grad = game.costs[i].contract_except(&x, i).expect("validated shapes");
        for slot in layout.duals_of(i) {
            let q = &game.constraints[slot.constraint].1;
            let v = q.contract_except(&x, i).expect("validated shapes");
            let gamma = z[slot.index];
            for (g, q) in grad.iter_mut().zip(v) {
                *g -= gamma * q;
            }
        }
        for (row, g) in layout.weights[i].clone().zip(grad) {
            out[row] = g - lambda;
        }
        out[layout.simplex_duals[i]] = x[i].iter().sum::<f64>() - 1.0;
    }
    for slot in &layout.constraint_duals {
        let q = &game.constraints[slot.constraint].1;
        out[slot.index] = q.full_contract(&x).expect("validated shapes") - slot.threshold;
    }
}

/// Writes the derivatives of the weight rows with respect to `x`,
/// `lambda` and `gamma`.
fn weight_jacobian(game: &TensorGame, layout: &VariableLayout, z: &[f64], jac: &mut DMatrix<f64>) {
    let x = layout.mix(z);
    let n = game.n_players();
    for i in 0..n {
        let rows = layout.weights[i].clone();
        let mut lagrangian = game.costs[i].clone();
        for slot in layout.duals_of(i) {
            let q = &game.constraints[slot.constraint].1;
            lagrangian = lagrangian.axpy(-z[slot.index], q).expect("validated shapes");
            let v = q.contract_except(&x, i).expect("validated shapes");
            for (row, val) in rows.clone().zip(v) {
                jac[(row, slot.index)] = -val;
            }
        }
        for p in (0..n).filter(|&p| p != i) {
            let block = lagrangian.contract_except_pair(&x, i, p).expect("validated shapes");
            let cols = layout.weights[p].clone();
            let width = cols.len();
            for (a, row) in rows.clone().enumerate() {
                for (b, col) in cols.clone().enumerate() {
                    jac[(row, col)] = block[a * width + b];
                }
            }
        }
        let lam = layout.simplex_duals[i];
        for row in rows.clone() {
            jac[(row, lam)] = -1.0;
            jac[(lam, row)] = 1.0;
        }
    }
    for slot in &layout.constraint_duals {
        let q = &game.constraints[slot.constraint].1;
        for p in 0..n {
            let v = q.contract_except(&x, p).expect("validated shapes");
            for (col, val) in layout.weights[p].clone().zip(v) {
                jac[(slot.index, col)] = val;
            }
        }
    }
}

struct WeightSystem {
    game: TensorGame,
    layout: VariableLayout,
}

impl ComplementaritySystem for WeightSystem {
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.len];
        weight_residual(&self.game, &self.layout, z, &mut out);
        out
    }

    fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.layout.len, self.layout.len);
        weight_jacobian(&self.game, &self.layout, z, &mut jac);
        jac
    }
}

/// KKT system of a tensor game over mixing weights only.
pub fn assemble_weight_mcp(game: &TensorGame) -> Result<McpInstance> {
    let owned: Vec<_> = (0..game.n_players()).map(|i| game.owned(i)).collect();
    let layout = VariableLayout::new(game.counts(), None, &owned);
    let (lower, upper) = bounds_for(&layout, None);
    let system = Arc::new(WeightSystem {
        game: game.clone(),
        layout: layout.clone(),
    });
    McpInstance::new(lower, upper, Some(layout), system)
}

/// Scaling of the strategy stationarity rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyRows {
    /// Gradient of the expected Lagrangian in `s_{i,k}`: every joint term
    /// carries the full product of weights, including `x_{i,k}`.
    #[default]
    Weighted,
    /// The same rows divided by `x_{i,k}`, i.e. the gradient conditional on
    /// player `i` playing strategy `k`. Any solution of this system solves
    /// the weighted one, and unused strategies keep a nondegenerate row.
    Conditional,
}

struct AugmentedSystem {
    game: AugmentedGame,
    indicator: IndicatorConfig,
    layout: VariableLayout,
    offsets: Vec<usize>,
    rows: StrategyRows,
}

/// Everything the KKT rows need at one joint pure strategy.
struct JointTerms {
    point: Vec<f64>,
    /// `x_{p, k_p}` per player
    w: Vec<f64>,
    weight: f64,
    /// product of all weights except player p's
    weight_without: Vec<f64>,
    cost: Vec<f64>,
    cost_grad: Vec<Vec<f64>>,
    /// `(rho, rho', rho'')` per constraint
    rho: Vec<(f64, f64, f64)>,
    constraint_grad: Vec<Vec<f64>>,
}

impl JointTerms {
    /// Product of all weights except players `a` and `b`.
    fn weight_without_pair(&self, a: usize, b: usize) -> f64 {
        self.w
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != a && p != b)
            .map(|(_, v)| v)
            .product()
    }
}

impl AugmentedSystem {
    fn joint_terms(&self, k: &[usize], x: &[Vec<f64>], s: &StrategyProfile) -> JointTerms {
        let n = k.len();
        let mut point = Vec::with_capacity(*self.offsets.last().unwrap());
        for (p, &kp) in k.iter().enumerate() {
            point.extend_from_slice(&s.0[p][kp]);
        }
        let w: Vec<f64> = k.iter().enumerate().map(|(p, &kp)| x[p][kp]).collect();
        let mut prefix = vec![1.0; n + 1];
        for p in 0..n {
            prefix[p + 1] = prefix[p] * w[p];
        }
        let mut weight_without = vec![1.0; n];
        let mut suffix = 1.0;
        for p in (0..n).rev() {
            weight_without[p] = prefix[p] * suffix;
            suffix *= w[p];
        }
        let cost = self.game.costs.iter().map(|f| f.value(&point)).collect();
        let cost_grad = self.game.costs.iter().map(|f| f.gradient(&point)).collect();
        let rho = self
            .game
            .constraints
            .iter()
            .map(|(_, g)| {
                let v = g.value(&point);
                let (d1, d2) = self.indicator.derivatives(v);
                (self.indicator.apply(v), d1, d2)
            })
            .collect();
        let constraint_grad = self
            .game
            .constraints
            .iter()
            .map(|(_, g)| g.gradient(&point))
            .collect();
        JointTerms {
            point,
            w,
            weight: prefix[n],
            weight_without,
            cost,
            cost_grad,
            rho,
            constraint_grad,
        }
    }

    /// Weight on player `i`'s strategy row for this joint term.
    fn row_weight(&self, terms: &JointTerms, i: usize) -> f64 {
        match self.rows {
            StrategyRows::Weighted => terms.weight,
            StrategyRows::Conditional => terms.weight_without[i],
        }
    }

    /// Derivative of [`Self::row_weight`] in `x_{q, k_q}`.
    fn row_weight_slope(&self, terms: &JointTerms, i: usize, q: usize) -> f64 {
        match self.rows {
            StrategyRows::Weighted => terms.weight_without[q],
            StrategyRows::Conditional if q == i => 0.0,
            StrategyRows::Conditional => terms.weight_without_pair(i, q),
        }
    }

    fn coords(&self, q: usize, l: usize) -> (Range<usize>, Range<usize>) {
        (
            self.offsets[q]..self.offsets[q + 1],
            self.layout.strategy_point(q, l),
        )
    }

    /// Player `i`'s per-joint Lagrangian `f_i - sum_j gamma_ij rho(g_j)`
    /// and its gradient in the joint point.
    fn lagrangian(&self, i: usize, terms: &JointTerms, z: &[f64]) -> (f64, Vec<f64>) {
        let mut value = terms.cost[i];
        let mut grad = terms.cost_grad[i].clone();
        for slot in self.layout.duals_of(i) {
            let gamma = z[slot.index];
            let (r0, r1, _) = terms.rho[slot.constraint];
            value -= gamma * r0;
            for (a, d) in grad.iter_mut().zip(&terms.constraint_grad[slot.constraint]) {
                *a -= gamma * r1 * d;
            }
        }
        (value, grad)
    }

    /// Rows `rows` of player `i`'s Lagrangian Hessian, each of full width.
    fn lagrangian_hessian_rows(
        &self,
        i: usize,
        terms: &JointTerms,
        z: &[f64],
        rows: Range<usize>,
        hessians: &mut HessianCache,
    ) -> Vec<Vec<f64>> {
        let dim = terms.point.len();
        let hf = hessians.cost(&self.game, i, &terms.point);
        let mut out: Vec<Vec<f64>> = rows.clone().map(|r| hf[r * dim..(r + 1) * dim].to_vec()).collect();
        for slot in self.layout.duals_of(i) {
            let gamma = z[slot.index];
            if gamma == 0.0 {
                continue;
            }
            let (_, r1, r2) = terms.rho[slot.constraint];
            let dg = &terms.constraint_grad[slot.constraint];
            let hg = hessians.constraint(&self.game, slot.constraint, &terms.point);
            for (row, r) in out.iter_mut().zip(rows.clone()) {
                for (c, v) in row.iter_mut().enumerate() {
                    *v -= gamma * (r2 * dg[r] * dg[c] + r1 * hg[r * dim + c]);
                }
            }
        }
        out
    }
}

/// Hessians of the game's functions, evaluated once when constant.
struct HessianCache {
    costs: Vec<Option<Vec<f64>>>,
    constraints: Vec<Option<Vec<f64>>>,
    cost_scratch: Vec<f64>,
    constraint_scratch: Vec<f64>,
}

impl HessianCache {
    fn new(game: &AugmentedGame) -> Self {
        Self {
            costs: game.costs.iter().map(|f| f.constant_hessian().map(<[f64]>::to_vec)).collect(),
            constraints: game
                .constraints
                .iter()
                .map(|(_, g)| g.constant_hessian().map(<[f64]>::to_vec))
                .collect(),
            cost_scratch: Vec::new(),
            constraint_scratch: Vec::new(),
        }
    }

    fn cost<'a>(&'a mut self, game: &AugmentedGame, i: usize, point: &[f64]) -> &'a [f64] {
        match &self.costs[i] {
            Some(h) => h,
            None => {
                self.cost_scratch = game.costs[i].hessian(point);
                &self.cost_scratch
            }
        }
    }

    fn constraint<'a>(&'a mut self, game: &AugmentedGame, j: usize, point: &[f64]) -> &'a [f64] {
        match &self.constraints[j] {
            Some(h) => h,
            None => {
                self.constraint_scratch = game.constraints[j].1.hessian(point);
                &self.constraint_scratch
            }
        }
    }
}

impl ComplementaritySystem for AugmentedSystem {
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let (x, s) = (self.layout.mix(z), self.layout.strategies(z));
        let mut out = vec![0.0; self.layout.len];
        for k in JointIndices::new(&self.game.counts) {
            let terms = self.joint_terms(&k, &x, &s);
            for i in 0..self.game.n_players() {
                let (value, grad) = self.lagrangian(i, &terms, z);
                out[self.layout.weights[i].start + k[i]] += terms.weight_without[i] * value;
                let (own, rows) = self.coords(i, k[i]);
                let wt = self.row_weight(&terms, i);
                for (c, row) in own.zip(rows) {
                    out[row] += wt * grad[c];
                }
            }
            for slot in &self.layout.constraint_duals {
                out[slot.index] += terms.weight * terms.rho[slot.constraint].0;
            }
        }
        for (i, r) in self.layout.weights.iter().enumerate() {
            let lam = self.layout.simplex_duals[i];
            for row in r.clone() {
                out[row] -= z[lam];
            }
            out[lam] = x[i].iter().sum::<f64>() - 1.0;
        }
        for slot in &self.layout.constraint_duals {
            out[slot.index] -= slot.threshold;
        }
        out
    }

    fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let (x, s) = (self.layout.mix(z), self.layout.strategies(z));
        let n = self.game.n_players();
        let mut jac = DMatrix::zeros(self.layout.len, self.layout.len);
        let mut hessians = HessianCache::new(&self.game);
        for k in JointIndices::new(&self.game.counts) {
            let terms = self.joint_terms(&k, &x, &s);
            for i in 0..n {
                let (value, grad) = self.lagrangian(i, &terms, z);
                let x_row = self.layout.weights[i].start + k[i];
                let (own, s_rows) = self.coords(i, k[i]);
                let hess = self.lagrangian_hessian_rows(i, &terms, z, own.clone(), &mut hessians);
                let wt = self.row_weight(&terms, i);
                let ww = terms.weight_without[i];
                for q in 0..n {
                    let (qc, s_cols) = self.coords(q, k[q]);
                    let x_col = self.layout.weights[q].start + k[q];
                    // d F_x / d x
                    if q != i {
                        jac[(x_row, x_col)] += terms.weight_without_pair(i, q) * value;
                    }
                    // d F_x / d s
                    for (c, col) in qc.clone().zip(s_cols.clone()) {
                        jac[(x_row, col)] += ww * grad[c];
                    }
                    // d F_s / d s
                    for (h, row) in hess.iter().zip(s_rows.clone()) {
                        for (c, col) in qc.clone().zip(s_cols.clone()) {
                            jac[(row, col)] += wt * h[c];
                        }
                    }
                    // d F_s / d x
                    let slope = self.row_weight_slope(&terms, i, q);
                    for (r, row) in own.clone().zip(s_rows.clone()) {
                        jac[(row, x_col)] += slope * grad[r];
                    }
                }
                for slot in self.layout.duals_of(i) {
                    let (r0, r1, _) = terms.rho[slot.constraint];
                    let dg = &terms.constraint_grad[slot.constraint];
                    // d F_x / d gamma
                    jac[(x_row, slot.index)] -= ww * r0;
                    // d F_s / d gamma
                    for (r, row) in own.clone().zip(s_rows.clone()) {
                        jac[(row, slot.index)] -= wt * r1 * dg[r];
                    }
                }
            }
            for slot in &self.layout.constraint_duals {
                let (r0, r1, _) = terms.rho[slot.constraint];
                let dg = &terms.constraint_grad[slot.constraint];
                for q in 0..n {
                    let (qc, s_cols) = self.coords(q, k[q]);
                    // d F_gamma / d x
                    jac[(slot.index, self.layout.weights[q].start + k[q])] += terms.weight_without[q] * r0;
                    // d F_gamma / d s
                    for (c, col) in qc.zip(s_cols) {
                        jac[(slot.index, col)] += terms.weight * r1 * dg[c];
                    }
                }
            }
        }
        for (i, r) in self.layout.weights.iter().enumerate() {
            let lam = self.layout.simplex_duals[i];
            for row in r.clone() {
                jac[(row, lam)] = -1.0;
                jac[(lam, row)] = 1.0;
            }
        }
        jac
    }
}

/// KKT system over mixing weights and pure strategies at strictness
/// `strictness` (ignored in expectation mode).
pub fn assemble_augmented_mcp(game: &AugmentedGame, strictness: f64) -> Result<McpInstance> {
    assemble_augmented_mcp_with(game, strictness, StrategyRows::Weighted)
}

pub fn assemble_augmented_mcp_with(
    game: &AugmentedGame,
    strictness: f64,
    rows: StrategyRows,
) -> Result<McpInstance> {
    let missing = game
        .costs
        .iter()
        .chain(game.constraints.iter().map(|(_, g)| g))
        .any(|f| !f.has_gradient());
    if missing {
        return Err(Error::Config(
            "every cost and constraint function needs an analytic gradient".into(),
        ));
    }
    let indicator = game.indicator.with_strictness(strictness)?;
    let owned: Vec<_> = (0..game.n_players()).map(|i| game.owned(i)).collect();
    let dims = game.dims();
    let layout = VariableLayout::new(&game.counts, Some(&dims), &owned);
    let (lower, upper) = bounds_for(&layout, Some(&game.boxes));
    let system = Arc::new(AugmentedSystem {
        game: game.clone(),
        indicator,
        layout: layout.clone(),
        offsets: game.joint_offsets(),
        rows,
    });
    McpInstance::new(lower, upper, Some(layout), system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ConstraintMode, ConstraintSpec, MixProfile, SmoothFn, StrategyBox};
    use crate::scenarios::{hog_poacher_ranger, HprParams};
    use crate::tensor::DenseTensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matching_pennies() -> TensorGame {
        let a = DenseTensor::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        TensorGame::new(ConstraintMode::Chance, vec![a.clone(), a.map(|v| -v)], vec![]).unwrap()
    }

    fn fd_jacobian(mcp: &McpInstance, z: &[f64]) -> DMatrix<f64> {
        let n = z.len();
        let h = 1e-6;
        let mut out = DMatrix::zeros(n, n);
        let mut p = z.to_vec();
        for c in 0..n {
            p[c] = z[c] + h;
            let fp = mcp.residual(&p);
            p[c] = z[c] - h;
            let fm = mcp.residual(&p);
            p[c] = z[c];
            for r in 0..n {
                out[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        out
    }

    fn assert_jacobian_close(mcp: &McpInstance, z: &[f64], tol: f64) {
        let j = mcp.jacobian(z);
        let fd = fd_jacobian(mcp, z);
        for r in 0..z.len() {
            for c in 0..z.len() {
                let (a, b) = (j[(r, c)], fd[(r, c)]);
                assert!(
                    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0),
                    "jacobian ({r},{c}): analytic {a} vs fd {b}"
                );
            }
        }
    }

    #[test]
    fn hpr_weight_dimension() {
        let game =
            hog_poacher_ranger(&HprParams::default(), IndicatorConfig::chance(1.0).unwrap(), 0.8)
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = StrategyProfile(
            (0..3)
                .map(|_| (0..2).map(|_| vec![rng.random_range(-2.0..2.0); 2]).collect())
                .collect(),
        );
        let mcp = assemble_weight_mcp(&game.lift(&s).unwrap()).unwrap();
        assert_eq!(mcp.dim(), 10);
        let mcp = assemble_augmented_mcp(&game, 1.0).unwrap();
        assert_eq!(mcp.dim(), 22);
        let layout = mcp.layout.as_ref().unwrap();
        assert_eq!(layout.constraint_duals.len(), 1);
        assert_eq!(layout.constraint_duals[0].player, 1);
        assert_eq!(mcp.lower[6..18], [-2.0; 12]);
        assert_eq!(mcp.upper[6..18], [2.0; 12]);
    }

    #[test]
    fn matching_pennies_residual_vanishes_at_equilibrium() {
        let mcp = assemble_weight_mcp(&matching_pennies()).unwrap();
        let z = vec![0.5, 0.5, 0.5, 0.5, 0.0, 0.0];
        let f = mcp.residual(&z);
        assert!(f.iter().all(|v| v.abs() < 1e-15), "{f:?}");
    }

    fn random_weight_game(rng: &mut ChaCha8Rng) -> TensorGame {
        let shape = vec![2, 3, 2];
        let n: usize = shape.iter().product();
        let rand_t = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            DenseTensor::new(shape.clone(), (0..n).map(|_| rng.random_range(lo..hi)).collect())
                .unwrap()
        };
        let costs = (0..3).map(|_| rand_t(rng, -1.0, 1.0)).collect();
        let constraints = vec![
            (ConstraintSpec::shared(&[0, 2], 0.6), rand_t(rng, 0.0, 1.0)),
            (ConstraintSpec::shared(&[1], 0.3), rand_t(rng, 0.0, 1.0)),
        ];
        TensorGame::new(ConstraintMode::Chance, costs, constraints).unwrap()
    }

    #[test]
    fn weight_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let game = random_weight_game(&mut rng);
            let mcp = assemble_weight_mcp(&game).unwrap();
            let z: Vec<f64> = (0..mcp.dim()).map(|_| rng.random_range(0.05..1.0)).collect();
            assert_jacobian_close(&mcp, &z, 1e-5);
        }
    }

    #[test]
    fn euler_identity_on_weight_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let game = random_weight_game(&mut rng);
            let mcp = assemble_weight_mcp(&game).unwrap();
            let layout = mcp.layout.clone().unwrap();
            let x = MixProfile::uniform(&[2, 3, 2]);
            let lambda: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let gamma: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let z = layout.pack(x.weights(), None, &lambda, &gamma).unwrap();
            let f = mcp.residual(&z);
            for i in 0..3 {
                let dot: f64 = layout.weights[i]
                    .clone()
                    .zip(&x.0[i])
                    .map(|(r, xi)| f[r] * xi)
                    .sum();
                let mut expected = game.expected_cost(&x, i).unwrap() - lambda[i];
                for (slot, g) in layout.constraint_duals.iter().zip(&gamma) {
                    if slot.player == i {
                        expected -= g * game.constraint_satisfaction(&x, slot.constraint).unwrap();
                    }
                }
                assert!((dot - expected).abs() < 1e-10);
            }
        }
    }

    fn random_point(rng: &mut ChaCha8Rng, mcp: &McpInstance) -> Vec<f64> {
        let layout = mcp.layout.as_ref().unwrap();
        (0..mcp.dim())
            .map(|i| {
                if layout.weights.iter().any(|r| r.contains(&i)) {
                    rng.random_range(0.05..1.0)
                } else if layout.strategies.iter().any(|r| r.contains(&i)) {
                    rng.random_range(-1.8..1.8)
                } else {
                    rng.random_range(0.0..1.5)
                }
            })
            .collect()
    }

    #[test]
    fn augmented_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for indicator in [
            IndicatorConfig::chance(2.0).unwrap(),
            IndicatorConfig::expectation(),
        ] {
            let eps = if indicator.mode == ConstraintMode::Chance { 0.8 } else { 0.0 };
            let game = hog_poacher_ranger(&HprParams::default(), indicator, eps).unwrap();
            let mcp = assemble_augmented_mcp(&game, 2.0).unwrap();
            for _ in 0..25 {
                let z = random_point(&mut rng, &mcp);
                assert_jacobian_close(&mcp, &z, 1e-5);
            }
        }
    }

    #[test]
    fn conditional_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let game =
            hog_poacher_ranger(&HprParams::default(), IndicatorConfig::chance(1.0).unwrap(), 0.8)
                .unwrap();
        let mcp = assemble_augmented_mcp_with(&game, 4.0, StrategyRows::Conditional).unwrap();
        for _ in 0..25 {
            let z = random_point(&mut rng, &mcp);
            assert_jacobian_close(&mcp, &z, 1e-5);
        }
    }

    #[test]
    fn conditional_rows_are_weighted_rows_over_own_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let game =
            hog_poacher_ranger(&HprParams::default(), IndicatorConfig::chance(1.0).unwrap(), 0.8)
                .unwrap();
        let w = assemble_augmented_mcp(&game, 8.0).unwrap();
        let c = assemble_augmented_mcp_with(&game, 8.0, StrategyRows::Conditional).unwrap();
        let layout = w.layout.clone().unwrap();
        for _ in 0..20 {
            let z = random_point(&mut rng, &w);
            let (fw, fc) = (w.residual(&z), c.residual(&z));
            for r in 0..z.len() {
                let owner = (0..3).find_map(|i| {
                    (0..2).find(|&k| layout.strategy_point(i, k).contains(&r)).map(|k| (i, k))
                });
                let expected = match owner {
                    Some((i, k)) => fw[r] / z[layout.weights[i].start + k],
                    None => fw[r],
                };
                assert!((fc[r] - expected).abs() <= 1e-10 * expected.abs().max(1.0));
            }
        }
    }

    #[test]
    fn augmented_rows_agree_with_lifted_weight_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let game =
            hog_poacher_ranger(&HprParams::default(), IndicatorConfig::chance(1.0).unwrap(), 0.8)
                .unwrap();
        let aug = assemble_augmented_mcp(&game, 16.0).unwrap();
        let layout = aug.layout.clone().unwrap();
        for _ in 0..20 {
            let z = random_point(&mut rng, &aug);
            let s = layout.strategies(&z);
            let lifted = game
                .lift_with(&s, &IndicatorConfig::chance(16.0).unwrap())
                .unwrap();
            let plain = assemble_weight_mcp(&lifted).unwrap();
            let pl = plain.layout.as_ref().unwrap();
            let zw = pl
                .pack(&layout.mix(&z), None, &layout.lambdas(&z), &layout.gammas(&z))
                .unwrap();
            let fa = aug.residual(&z);
            let fw = plain.residual(&zw);
            for i in 0..3 {
                for (ra, rw) in layout.weights[i].clone().zip(pl.weights[i].clone()) {
                    assert!((fa[ra] - fw[rw]).abs() <= 1e-12);
                }
                assert!((fa[layout.simplex_duals[i]] - fw[pl.simplex_duals[i]]).abs() <= 1e-12);
            }
            for (a, b) in layout.constraint_duals.iter().zip(&pl.constraint_duals) {
                assert!((fa[a.index] - fw[b.index]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn missing_gradient_is_a_config_error() {
        let b = StrategyBox::cube(1, -2.0, 2.0).unwrap();
        let game = AugmentedGame::new(
            vec![1],
            vec![b],
            vec![SmoothFn::new(|s| s[0] * s[0])],
            vec![],
            IndicatorConfig::expectation(),
        )
        .unwrap();
        assert!(matches!(
            assemble_augmented_mcp(&game, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn layout_pack_roundtrip() {
        let layout = VariableLayout::new(&[2, 3], Some(&[2, 1]), &[vec![(0, 0.5)], vec![(0, 0.7)]]);
        assert_eq!(layout.len, 5 + 4 + 3 + 2 + 2);
        let s = StrategyProfile(vec![
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![5.0], vec![6.0], vec![7.0]],
        ]);
        let x = vec![vec![0.25, 0.75], vec![0.2, 0.3, 0.5]];
        let z = layout.pack(&x, Some(&s), &[1.0, -1.0], &[0.1, 0.2]).unwrap();
        assert_eq!(layout.mix(&z), x);
        assert_eq!(layout.strategies(&z), s);
        assert_eq!(layout.lambdas(&z), vec![1.0, -1.0]);
        assert_eq!(layout.gammas(&z), vec![0.1, 0.2]);
        assert!(layout.is_primal(11) && !layout.is_primal(12));
    }
}
