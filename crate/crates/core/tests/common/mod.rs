#![allow(dead_code)]

use chance_gnep::{DenseTensor, MixProfile, SmoothFn, StrategyProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&u, &v)| rel_err(u, v)).fold(0.0, f64::max)
}

/// Central differences of a scalar function.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + FD_STEP;
            let up = f(&p);
            p[i] = x[i] - FD_STEP;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Central differences of a vector function, as rows of the Jacobian.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let rows = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; rows];
    let mut p = x.to_vec();
    for c in 0..x.len() {
        p[c] = x[c] + FD_STEP;
        let up = f(&p);
        p[c] = x[c] - FD_STEP;
        let down = f(&p);
        p[c] = x[c];
        for r in 0..rows {
            jac[r][c] = (up[r] - down[r]) / (2.0 * FD_STEP);
        }
    }
    jac
}

/// Every joint index of a grid, last axis fastest.
pub fn joint_indices(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &m in counts {
        out = out
            .into_iter()
            .flat_map(|k| {
                (0..m).map(move |v| {
                    let mut k = k.clone();
                    k.push(v);
                    k
                })
            })
            .collect();
    }
    out
}

pub fn flat_index(counts: &[usize], k: &[usize]) -> usize {
    k.iter().zip(counts).fold(0, |acc, (&v, &m)| acc * m + v)
}

pub fn joint_prob(x: &[Vec<f64>], k: &[usize]) -> f64 {
    k.iter().enumerate().map(|(p, &v)| x[p][v]).product()
}

pub fn joint_point(s: &StrategyProfile, k: &[usize]) -> Vec<f64> {
    k.iter()
        .enumerate()
        .flat_map(|(p, &v)| s.0[p][v].iter().copied())
        .collect()
}

/// Sum over joint pure strategies of tensor entry times joint probability.
pub fn enumerate_contract(t: &DenseTensor, x: &[Vec<f64>]) -> f64 {
    joint_indices(t.shape())
        .iter()
        .map(|k| t.data()[flat_index(t.shape(), k)] * joint_prob(x, k))
        .sum()
}

pub fn enumerate_cost(x: &MixProfile, s: &StrategyProfile, f: &SmoothFn) -> f64 {
    joint_indices(&x.counts())
        .iter()
        .map(|k| f.value(&joint_point(s, k)) * joint_prob(&x.0, k))
        .sum()
}

pub fn enumerate_feasibility(x: &MixProfile, s: &StrategyProfile, g: &SmoothFn) -> f64 {
    joint_indices(&x.counts())
        .iter()
        .filter(|k| g.value(&joint_point(s, k)) >= 0.0)
        .map(|k| joint_prob(&x.0, k))
        .sum()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn random_mix(rng: &mut ChaCha8Rng, counts: &[usize]) -> MixProfile {
    MixProfile::new(counts.iter().map(|&m| random_simplex(rng, m)).collect()).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
    let len = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_strategies(
    rng: &mut ChaCha8Rng,
    counts: &[usize],
    dim: usize,
    lo: f64,
    hi: f64,
) -> StrategyProfile {
    StrategyProfile(
        counts
            .iter()
            .map(|&m| {
                (0..m)
                    .map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect())
                    .collect()
            })
            .collect(),
    )
}

/// Nash equilibria of a bimatrix game with nondegenerate square supports,
/// by support enumeration. `a` and `b` are the row and column player's
/// costs.
pub fn support_enumeration(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (a.len(), a[0].len());
    let mut out = Vec::new();
    for size in 1..=m.min(n) {
        for rows in subsets(m, size) {
            for cols in subsets(n, size) {
                // column mix q makes the row player indifferent over `rows`
                let Some(q) = indifference(&cols, &rows, |r, c| a[r][c]) else {
                    continue;
                };
                let Some(p) = indifference(&rows, &cols, |c, r| b[r][c]) else {
                    continue;
                };
                let mut x = vec![0.0; m];
                let mut y = vec![0.0; n];
                rows.iter().zip(&p).for_each(|(&r, &v)| x[r] = v);
                cols.iter().zip(&q).for_each(|(&c, &v)| y[c] = v);
                let row_costs: Vec<f64> = (0..m).map(|r| (0..n).map(|c| a[r][c] * y[c]).sum()).collect();
                let col_costs: Vec<f64> = (0..n).map(|c| (0..m).map(|r| b[r][c] * x[r]).sum()).collect();
                let rmin = row_costs.iter().copied().fold(f64::INFINITY, f64::min);
                let cmin = col_costs.iter().copied().fold(f64::INFINITY, f64::min);
                let tol = 1e-9;
                if rows.iter().all(|&r| row_costs[r] <= rmin + tol)
                    && cols.iter().all(|&c| col_costs[c] <= cmin + tol)
                {
                    out.push((x, y));
                }
            }
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|b| b.count_ones() as usize == k)
        .map(|b| (0..n).filter(|i| b >> i & 1 == 1).collect())
        .collect()
}

/// Weights `w` on `support` with `sum_c cost(r, c) w_c` equal across
/// `against`, summing to one and nonnegative.
fn indifference(
    support: &[usize],
    against: &[usize],
    cost: impl Fn(usize, usize) -> f64,
) -> Option<Vec<f64>> {
    let k = support.len();
    let mut mat = nalgebra::DMatrix::zeros(k + 1, k + 1);
    let mut rhs = nalgebra::DVector::zeros(k + 1);
    for (row, &r) in against.iter().enumerate() {
        for (col, &c) in support.iter().enumerate() {
            mat[(row, col)] = cost(r, c);
        }
        mat[(row, k)] = -1.0;
    }
    for col in 0..k {
        mat[(k, col)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = mat.lu().solve(&rhs)?;
    let w: Vec<f64> = sol.iter().take(k).copied().collect();
    w.iter().all(|&v| v >= -1e-12).then_some(w)
}
