//! Semismooth Newton solver for box-constrained mixed complementarity
//! problems, via the Fischer-Burmeister reformulation.
//!
//! Every coordinate of `F(z) perp l <= z <= u` is mapped to a scalar
//! equation that vanishes exactly at complementary points:
//!
//! * free: `F_i`
//! * lower only: `phi(z_i - l_i, F_i)`
//! * upper only: `-phi(u_i - z_i, -F_i)`
//! * both: `phi(z_i - l_i, -phi(u_i - z_i, -F_i))`
//!
//! with `phi(a, b) = a + b - sqrt(a^2 + b^2)`. Newton steps on this system
//! are globalized by a projected Armijo search on `0.5 * |Phi|^2`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kkt::McpInstance;

/// Pivot magnitude below which the Newton matrix is treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Perturbation applied to `(a, b)` at the kink `a = b = 0`.
const KINK_SHIFT: f64 = 1e-12;

const MIN_STEP: f64 = 1e-12;

/// An attempt stalls when its merit has not dropped by `STALL_RATIO` for
/// this many iterations.
const STALL_WINDOW: usize = 80;
const STALL_RATIO: f64 = 0.99;

/// Restart `r` perturbs with scale `perturbation * 2^min(r - 1, MAX_DOUBLINGS)`.
const MAX_DOUBLINGS: i32 = 4;

/// Factor applied to the smoothing parameter at each homotopy step.
const SMOOTHING_DECAY: f64 = 0.1;

/// Added to mixing weights before a multiplicative restart perturbation.
const WEIGHT_FLOOR: f64 = 0.01;


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Infinity-norm tolerance on the reformulated residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    pub max_restarts: usize,
    pub perturbation: f64,
    /// Seed for restart perturbations.
    pub seed: u64,
    /// Initial smoothing of the complementarity function; each attempt
    /// follows the smoothed solutions down to the exact system. Zero solves
    /// the exact system directly.
    pub smoothing: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            max_restarts: 5,
            perturbation: 0.1,
            seed: 0,
            smoothing: 0.01,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument("backtrack factor must be in (0, 1)".into()));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 0.5) {
            return Err(Error::InvalidArgument(
                "sufficient decrease constant must be in (0, 0.5)".into(),
            ));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidArgument("smoothing must be finite and nonnegative".into()));
        }
        if !(self.perturbation >= 0.0) {
            return Err(Error::InvalidArgument("perturbation must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// No step direction reduced the merit function.
    SingularFailure,
    RestartExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub z: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// `phi(a, b) = a + b - sqrt(a^2 + b^2)`; zero iff `a, b >= 0` and `ab = 0`.
pub fn fischer_burmeister(a: f64, b: f64) -> f64 {
    smoothed_fb(a, b, 0.0)
}

/// `a + b - sqrt(a^2 + b^2 + 2 mu)`; for `mu > 0` zero iff `a, b > 0` and
/// `ab = mu / 2`.
fn smoothed_fb(a: f64, b: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        a + b - a.hypot(b)
    } else {
        a + b - (a * a + b * b + 2.0 * mu).sqrt()
    }
}

/// Partial derivatives of [`smoothed_fb`], shifted off the kink.
fn fb_partials(a: f64, b: f64, mu: f64) -> (f64, f64) {
    let (a, b) = if a == 0.0 && b == 0.0 && mu == 0.0 {
        (KINK_SHIFT, KINK_SHIFT)
    } else {
        (a, b)
    };
    let r = (a * a + b * b + 2.0 * mu).sqrt();
    (1.0 - a / r, 1.0 - b / r)
}

#[derive(Debug, Clone, Copy)]
enum BoundKind {
    Free,
    Lower,
    Upper,
    Both,
    Fixed,
}

fn bound_kind(l: f64, u: f64) -> BoundKind {
    match (l.is_finite(), u.is_finite()) {
        (false, false) => BoundKind::Free,
        (true, false) => BoundKind::Lower,
        (false, true) => BoundKind::Upper,
        (true, true) if l == u => BoundKind::Fixed,
        (true, true) => BoundKind::Both,
    }
}

fn reformulate(l: f64, u: f64, z: f64, f: f64, mu: f64) -> f64 {
    match bound_kind(l, u) {
        BoundKind::Free => f,
        BoundKind::Lower => smoothed_fb(z - l, f, mu),
        BoundKind::Upper => -smoothed_fb(u - z, -f, mu),
        BoundKind::Both => smoothed_fb(z - l, -smoothed_fb(u - z, -f, mu), mu),
        BoundKind::Fixed => z - l,
    }
}

/// Returns `(d Phi / d z_i, d Phi / d F_i)` for one coordinate.
fn reformulate_partials(l: f64, u: f64, z: f64, f: f64, mu: f64) -> (f64, f64) {
    match bound_kind(l, u) {
        BoundKind::Free => (0.0, 1.0),
        BoundKind::Lower => fb_partials(z - l, f, mu),
        BoundKind::Upper => fb_partials(u - z, -f, mu),
        BoundKind::Both => {
            let inner = smoothed_fb(u - z, -f, mu);
            let (ia, ib) = fb_partials(u - z, -f, mu);
            let (oa, ob) = fb_partials(z - l, -inner, mu);
            // d(-inner)/dz = ia, d(-inner)/dF = ib
            (oa + ob * ia, ob * ib)
        }
        BoundKind::Fixed => (1.0, 0.0),
    }
}

pub fn reformulated_residual(mcp: &McpInstance, z: &[f64]) -> Vec<f64> {
    let f = mcp.residual(z);
    reformulate_all(mcp, z, &f, 0.0)
}

fn reformulate_all(mcp: &McpInstance, z: &[f64], f: &[f64], mu: f64) -> Vec<f64> {
    (0..z.len())
        .map(|i| reformulate(mcp.lower[i], mcp.upper[i], z[i], f[i], mu))
        .collect()
}

/// An element of the generalized Jacobian of the reformulated residual.
pub fn reformulated_jacobian(mcp: &McpInstance, z: &[f64]) -> DMatrix<f64> {
    let f = mcp.residual(z);
    chain_jacobian(mcp, z, &f, 0.0)
}

fn chain_jacobian(mcp: &McpInstance, z: &[f64], f: &[f64], mu: f64) -> DMatrix<f64> {
    let mut jac = mcp.jacobian(z);
    for i in 0..z.len() {
        let (dz, df) = reformulate_partials(mcp.lower[i], mcp.upper[i], z[i], f[i], mu);
        let mut row = jac.row_mut(i);
        row *= df;
        row[i] += dz;
    }
    jac
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

struct Attempt {
    status: SolveStatus,
    z: Vec<f64>,
    norm: f64,
    iterations: usize,
}

/// Newton direction, or `None` when the pivot test flags singularity.
fn newton_direction(h: &DMatrix<f64>, phi: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = h.clone().lu();
    let u = lu.u();
    if u.diagonal().iter().any(|p| p.abs() < SINGULAR_PIVOT) {
        return None;
    }
    let d = lu.solve(&(-phi))?;
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Levenberg-Marquardt direction `(H'H + mu I) d = -H'Phi`.
fn regularized_direction(h: &DMatrix<f64>, grad: &DVector<f64>, phi_norm: f64) -> Option<DVector<f64>> {
    let n = h.ncols();
    let mu = phi_norm.clamp(1e-10, 1.0);
    let normal = h.transpose() * h + DMatrix::identity(n, n) * mu;
    let d = normal.cholesky()?.solve(&(-grad));
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Point of the current iterate with its residual at smoothing `mu`.
struct Iterate {
    z: Vec<f64>,
    f: Vec<f64>,
    phi: Vec<f64>,
    merit: f64,
}

impl Iterate {
    fn at(mcp: &McpInstance, z: Vec<f64>, mu: f64) -> Self {
        let f = mcp.residual(&z);
        let phi = reformulate_all(mcp, &z, &f, mu);
        let merit = half_sq(&phi);
        Self { z, f, phi, merit }
    }

    fn smoothed(self, mcp: &McpInstance, mu: f64) -> Self {
        let phi = reformulate_all(mcp, &self.z, &self.f, mu);
        let merit = half_sq(&phi);
        Self { phi, merit, ..self }
    }

    /// Unsmoothed residual norm, the convergence measure.
    fn norm(&self, mcp: &McpInstance) -> f64 {
        inf_norm(&reformulate_all(mcp, &self.z, &self.f, 0.0))
    }
}

/// Next smoothing level once the smoothed system is solved to `mu`'s own
/// scale; zero ends the homotopy.
fn next_smoothing(mu: f64, tolerance: f64) -> f64 {
    let next = mu * SMOOTHING_DECAY;
    if next < tolerance * tolerance {
        0.0
    } else {
        next
    }
}

fn run_attempt(mcp: &McpInstance, start: &[f64], opts: &SolverOptions) -> Attempt {
    let mut z = start.to_vec();
    mcp.project(&mut z);
    let mut mu = opts.smoothing;
    let mut cur = Iterate::at(mcp, z, mu);
    let mut norm = cur.norm(mcp);
    let mut singular = false;
    let (mut best_merit, mut best_it) = (cur.merit, 0);
    let mut used = opts.max_iterations;

    for it in 0..opts.max_iterations {
        if norm <= opts.tolerance {
            return Attempt {
                status: SolveStatus::Converged,
                z: cur.z,
                norm,
                iterations: it,
            };
        }
        if !norm.is_finite() {
            break;
        }
        while mu > 0.0 && inf_norm(&cur.phi) <= mu.sqrt().max(opts.tolerance) {
            mu = next_smoothing(mu, opts.tolerance);
            cur = cur.smoothed(mcp, mu);
            (best_merit, best_it) = (cur.merit, it);
        }
        let h = chain_jacobian(mcp, &cur.z, &cur.f, mu);
        let phi_v = DVector::from_column_slice(&cur.phi);
        let grad = h.transpose() * &phi_v;

        let newton = newton_direction(&h, &phi_v);
        singular = newton.is_none();
        let candidates = [
            newton,
            regularized_direction(&h, &grad, phi_v.norm()),
            Some(-grad.clone()),
        ];

        let mut accepted = None;
        for d in candidates.into_iter().flatten() {
            let slope = grad.dot(&d);
            if !(slope < 0.0) {
                continue;
            }
            let mut t = 1.0;
            while t >= MIN_STEP {
                let mut trial: Vec<f64> =
                    cur.z.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
                mcp.project(&mut trial);
                let next = Iterate::at(mcp, trial, mu);
                if next.merit.is_finite()
                    && next.merit <= cur.merit + opts.sufficient_decrease * t * slope
                {
                    accepted = Some(next);
                    break;
                }
                t *= opts.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }

        match accepted {
            Some(next) => {
                cur = next;
                norm = cur.norm(mcp);
                if cur.merit < STALL_RATIO * best_merit {
                    (best_merit, best_it) = (cur.merit, it);
                } else if it - best_it >= STALL_WINDOW && norm > opts.tolerance {
                    used = it + 1;
                    break;
                }
            }
            None => {
                return Attempt {
                    status: SolveStatus::SingularFailure,
                    z: cur.z,
                    norm,
                    iterations: it + 1,
                };
            }
        }
    }
    let status = if norm <= opts.tolerance {
        SolveStatus::Converged
    } else if singular || !norm.is_finite() {
        SolveStatus::SingularFailure
    } else {
        SolveStatus::MaxIterations
    };
    Attempt {
        status,
        z: cur.z,
        norm,
        iterations: used,
    }
}

/// Solves the MCP starting from `z0` (projected onto the bounds). Failed
/// attempts restart from `z0` with the primal coordinates perturbed and
/// duals reset to zero.
pub fn solve(mcp: &McpInstance, z0: &[f64], opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    if z0.len() != mcp.dim() {
        return Err(Error::Shape(format!(
            "initial point has length {}, problem has dimension {}",
            z0.len(),
            mcp.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start = z0.to_vec();
    let mut total = 0;
    let mut best: Option<Attempt> = None;
    for restart in 0..=opts.max_restarts {
        if restart > 0 {
            let scale = opts.perturbation * f64::powi(2.0, (restart as i32 - 1).min(MAX_DOUBLINGS));
            start = perturbed_start(mcp, z0, scale, &mut rng);
        }
        let attempt = run_attempt(mcp, &start, opts);
        total += attempt.iterations;
        if attempt.status == SolveStatus::Converged {
            return Ok(SolveOutcome {
                status: SolveStatus::Converged,
                z: attempt.z,
                residual_norm: attempt.norm,
                iterations: total,
            });
        }
        if best.as_ref().is_none_or(|b| !(b.norm <= attempt.norm)) {
            best = Some(attempt);
        }
    }
    let best = best.expect("at least one attempt");
    let status = if opts.max_restarts > 0 {
        SolveStatus::RestartExhausted
    } else {
        best.status
    };
    Ok(SolveOutcome {
        status,
        z: best.z,
        residual_norm: best.norm,
        iterations: total,
    })
}

fn perturbed_start(mcp: &McpInstance, z0: &[f64], scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut z = z0.to_vec();
    let layout = mcp.layout.as_ref();
    for (i, v) in z.iter_mut().enumerate() {
        let u = rng.random_range(-scale..=scale);
        if layout.is_some_and(|l| l.weights.iter().any(|r| r.contains(&i))) {
            // multiplicative, so weights stay positive before renormalizing
            *v = (v.max(0.0) + WEIGHT_FLOOR) * u.exp();
        } else if layout.is_none_or(|l| l.is_primal(i)) {
            *v += u;
        } else {
            *v = 0.0;
        }
    }
    mcp.project(&mut z);
    if let Some(layout) = layout {
        for r in &layout.weights {
            let sum: f64 = z[r.clone()].iter().sum();
            z[r.clone()].iter_mut().for_each(|v| *v /= sum);
        }
    }
    z
}

/// Checks complementarity coordinate by coordinate: each `z_i` is within
/// `tol` of a bound with `F_i` of the right sign, or `|F_i| <= tol`.
pub fn complementarity_holds(mcp: &McpInstance, z: &[f64], tol: f64) -> bool {
    let f = mcp.residual(z);
    (0..z.len()).all(|i| {
        let (l, u) = (mcp.lower[i], mcp.upper[i]);
        if z[i] < l - tol || z[i] > u + tol {
            return false;
        }
        f[i].abs() <= tol
            || ((z[i] - l).abs() <= tol && f[i] >= -tol)
            || ((u - z[i]).abs() <= tol && f[i] <= tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ConstraintMode, TensorGame};
    use crate::kkt::assemble_weight_mcp;
    use crate::tensor::DenseTensor;

    fn scalar(lower: f64, upper: f64, f: fn(f64) -> f64, df: f64) -> McpInstance {
        McpInstance::from_fns(
            vec![lower],
            vec![upper],
            move |z| vec![f(z[0])],
            move |_| DMatrix::from_element(1, 1, df),
        )
        .unwrap()
    }

    #[test]
    fn fb_closed_forms() {
        assert_eq!(fischer_burmeister(0.0, 2.0), 0.0);
        assert_eq!(fischer_burmeister(3.0, 0.0), 0.0);
        assert!(fischer_burmeister(1.0, 1.0) > 0.0);
        assert!(fischer_burmeister(-1.0, 1.0) < 0.0);
    }

    #[test]
    fn residual_rows_by_bound_type() {
        let free = scalar(f64::NEG_INFINITY, f64::INFINITY, |z| z - 3.0, 1.0);
        assert_eq!(reformulated_residual(&free, &[1.0]), vec![-2.0]);
        let lower = scalar(0.0, f64::INFINITY, |_| 2.0, 0.0);
        assert_eq!(reformulated_residual(&lower, &[0.0]), vec![0.0]);
        let lower = scalar(0.0, f64::INFINITY, |_| 0.0, 0.0);
        assert_eq!(reformulated_residual(&lower, &[3.0]), vec![0.0]);
        // two-sided: at upper bound with negative F, at lower with positive F,
        // interior with zero F
        let boxed = scalar(-1.0, 1.0, |_| -2.0, 0.0);
        assert!(reformulated_residual(&boxed, &[1.0])[0].abs() < 1e-15);
        let boxed = scalar(-1.0, 1.0, |_| 2.0, 0.0);
        assert!(reformulated_residual(&boxed, &[-1.0])[0].abs() < 1e-15);
        let boxed = scalar(-1.0, 1.0, |_| 0.0, 0.0);
        assert!(reformulated_residual(&boxed, &[0.3])[0].abs() < 1e-15);
        let boxed = scalar(-1.0, 1.0, |_| 1.0, 0.0);
        assert!(reformulated_residual(&boxed, &[0.3])[0].abs() > 0.1);
    }

    #[test]
    fn scalar_solves() {
        let opts = SolverOptions::default();
        let mcp = scalar(0.0, f64::INFINITY, |z| z - 3.0, 1.0);
        let out = solve(&mcp, &[0.0], &opts).unwrap();
        assert!(out.converged());
        assert!((out.z[0] - 3.0).abs() < 1e-8);

        let mcp = scalar(0.0, f64::INFINITY, |z| z + 2.0, 1.0);
        let out = solve(&mcp, &[1.0], &opts).unwrap();
        assert!(out.converged());
        assert!(out.z[0].abs() < 1e-8);
        assert!(complementarity_holds(&mcp, &out.z, 1e-6));
    }

    #[test]
    fn boxed_quadratic_hits_upper_bound() {
        // minimize (z - 5)^2 on [-1, 2]: F = 2(z - 5)
        let mcp = scalar(-1.0, 2.0, |z| 2.0 * (z - 5.0), 2.0);
        let out = solve(&mcp, &[0.0], &SolverOptions::default()).unwrap();
        assert!(out.converged());
        assert!((out.z[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn matching_pennies_weights() {
        let a = DenseTensor::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let game =
            TensorGame::new(ConstraintMode::Chance, vec![a.clone(), a.map(|v| -v)], vec![]).unwrap();
        let mcp = assemble_weight_mcp(&game).unwrap();
        let out = solve(&mcp, &[0.9, 0.1, 0.2, 0.8, 0.0, 0.0], &SolverOptions::default()).unwrap();
        assert!(out.converged(), "{out:?}");
        for v in &out.z[..4] {
            assert!((v - 0.5).abs() < 1e-6);
        }
        assert!(complementarity_holds(&mcp, &out.z, 1e-6));
    }

    #[test]
    fn reformulated_jacobian_matches_fd_away_from_kinks() {
        // F(z) = (z1^2 - z2, z1 + 3 z2 - 1, sin z3) with mixed bounds
        let mcp = McpInstance::from_fns(
            vec![0.0, f64::NEG_INFINITY, -1.0],
            vec![f64::INFINITY, 2.0, 1.0],
            |z| vec![z[0] * z[0] - z[1], z[0] + 3.0 * z[1] - 1.0, z[2].sin()],
            |z| {
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[2.0 * z[0], -1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, z[2].cos()],
                )
            },
        )
        .unwrap();
        let z = [0.7, 0.4, 0.2];
        let h = reformulated_jacobian(&mcp, &z);
        let step = 1e-6;
        for c in 0..3 {
            let mut p = z;
            p[c] += step;
            let fp = reformulated_residual(&mcp, &p);
            p[c] -= 2.0 * step;
            let fm = reformulated_residual(&mcp, &p);
            for r in 0..3 {
                let fd = (fp[r] - fm[r]) / (2.0 * step);
                assert!((fd - h[(r, c)]).abs() < 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn deterministic_outcomes() {
        let a = DenseTensor::from_rows(&[vec![3.0, -1.0], vec![-2.0, 1.0]]).unwrap();
        let game =
            TensorGame::new(ConstraintMode::Chance, vec![a.clone(), a.map(|v| -v)], vec![]).unwrap();
        let mcp = assemble_weight_mcp(&game).unwrap();
        let opts = SolverOptions {
            seed: 99,
            ..SolverOptions::default()
        };
        let z0 = [0.3, 0.7, 0.6, 0.4, 0.1, -0.2];
        let a = solve(&mcp, &z0, &opts).unwrap();
        let b = solve(&mcp, &z0, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infeasible_problem_reports_failure() {
        // F(z) = -1 on [0, inf): needs z at an upper bound that does not exist
        let mcp = scalar(0.0, f64::INFINITY, |_| -1.0, 0.0);
        let opts = SolverOptions {
            max_iterations: 20,
            max_restarts: 2,
            ..SolverOptions::default()
        };
        let out = solve(&mcp, &[0.0], &opts).unwrap();
        assert_eq!(out.status, SolveStatus::RestartExhausted);
        let out = solve(
            &mcp,
            &[0.0],
            &SolverOptions {
                max_restarts: 0,
                ..opts
            },
        )
        .unwrap();
        assert!(matches!(
            out.status,
            SolveStatus::MaxIterations | SolveStatus::SingularFailure
        ));
    }

    #[test]
    fn option_validation() {
        let bad = SolverOptions {
            tolerance: 0.0,
            ..SolverOptions::default()
        };
        let mcp = scalar(0.0, f64::INFINITY, |z| z, 1.0);
        assert!(solve(&mcp, &[0.0], &bad).is_err());
        assert!(solve(&mcp, &[0.0, 1.0], &SolverOptions::default()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn fb_zero_iff_complementary(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let v = fischer_burmeister(a, b);
            if a == 0.0 || b == 0.0 {
                proptest::prop_assert!(v.abs() < 1e-15);
            } else {
                proptest::prop_assert!(v > 0.0);
            }
            // negative arguments never give a zero
            proptest::prop_assert!(fischer_burmeister(-a - 1e-3, b) < 0.0);
        }
    }
}
