//! Dense N-dimensional tensors and the multilinear contractions used for
//! every cost and constraint evaluation.
//!
//! A tensor over joint pure strategies has one axis per player. Contracting
//! axis `i` against player `i`'s mixing weights yields expected values; the
//! partial contractions give gradients and mixed second derivatives of those
//! expectations with respect to the weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of axes.
pub const MAX_AXES: usize = 8;

/// Row-major dense tensor of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// One index per axis into a [`DenseTensor`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointIndex(pub Vec<usize>);

impl JointIndex {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_AXES {
        return Err(Error::Shape(format!(
            "tensor must have between 1 and {MAX_AXES} axes, got {}",
            shape.len()
        )));
    }
    if let Some(axis) = shape.iter().position(|&m| m == 0) {
        return Err(Error::Shape(format!("axis {axis} has zero extent")));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {:?} (expected {len})",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![value; len],
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    /// Builds a 2-axis tensor from matrix rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(Error::Shape(format!(
                "index has {} entries, tensor has {} axes",
                index.len(),
                self.shape.len()
            )));
        }
        let mut off = 0;
        for (&k, &m) in index.iter().zip(&self.shape) {
            if k >= m {
                return Err(Error::Index {
                    what: "tensor axis",
                    index: k,
                    len: m,
                });
            }
            off = off * m + k;
        }
        Ok(off)
    }

    pub fn get(&self, index: &JointIndex) -> Result<f64> {
        Ok(self.data[self.offset(&index.0)?])
    }

    pub fn set(&mut self, index: &JointIndex, value: f64) -> Result<()> {
        let off = self.offset(&index.0)?;
        self.data[off] = value;
        Ok(())
    }

    /// Elementwise map into a new tensor of the same shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &DenseTensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "cannot add tensors of shape {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    fn check_vectors(&self, x: &[Vec<f64>]) -> Result<()> {
        if x.len() != self.shape.len() {
            return Err(Error::Shape(format!(
                "expected {} weight vectors, got {}",
                self.shape.len(),
                x.len()
            )));
        }
        for (axis, (v, &m)) in x.iter().zip(&self.shape).enumerate() {
            if v.len() != m {
                return Err(Error::Shape(format!(
                    "weight vector {axis} has length {}, axis extent is {m}",
                    v.len()
                )));
            }
        }
        Ok(())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.shape.len() {
            return Err(Error::Index {
                what: "player",
                index: axis,
                len: self.shape.len(),
            });
        }
        Ok(())
    }

    /// `T[.]x`: contracts every axis against its weight vector.
    pub fn full_contract(&self, x: &[Vec<f64>]) -> Result<f64> {
        self.check_vectors(x)?;
        let keep: [usize; 0] = [];
        let (_, data) = reduce_except(&self.shape, &self.data, x, &keep);
        Ok(data[0])
    }

    /// Contracts every axis except `axis`; the gradient of
    /// [`full_contract`](Self::full_contract) in `x[axis]`.
    pub fn contract_except(&self, x: &[Vec<f64>], axis: usize) -> Result<Vec<f64>> {
        self.check_vectors(x)?;
        self.check_axis(axis)?;
        let (_, data) = reduce_except(&self.shape, &self.data, x, &[axis]);
        Ok(data)
    }

    /// Contracts every axis except `i` and `j`, returning an `m_i x m_j`
    /// row-major matrix of mixed second derivatives.
    pub fn contract_except_pair(&self, x: &[Vec<f64>], i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_vectors(x)?;
        self.check_axis(i)?;
        self.check_axis(j)?;
        if i == j {
            return Err(Error::InvalidArgument(format!(
                "contract_except_pair needs distinct axes, got {i} twice"
            )));
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let (_, data) = reduce_except(&self.shape, &self.data, x, &[lo, hi]);
        if i < j {
            return Ok(data);
        }
        // result is laid out (j, i); transpose to (i, j)
        let (mi, mj) = (self.shape[i], self.shape[j]);
        let mut out = vec![0.0; mi * mj];
        for a in 0..mj {
            for b in 0..mi {
                out[b * mj + a] = data[a * mi + b];
            }
        }
        Ok(out)
    }

    /// Iterates all joint indices in row-major order.
    pub fn indices(&self) -> JointIndices {
        JointIndices::new(&self.shape)
    }
}

/// Reduces one axis of a row-major buffer against `v`.
fn reduce_axis(shape: &[usize], data: &[f64], axis: usize, v: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let outer: usize = shape[..axis].iter().product();
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (a, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let src = &data[(o * n + a) * inner..(o * n + a + 1) * inner];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape.remove(axis);
    (new_shape, out)
}

/// Progressive reduction of every axis not listed in `keep` (sorted
/// ascending). Axes are reduced from last to first so earlier axis numbers
/// stay valid.
fn reduce_except(
    shape: &[usize],
    data: &[f64],
    x: &[Vec<f64>],
    keep: &[usize],
) -> (Vec<usize>, Vec<f64>) {
    let mut cur_shape = shape.to_vec();
    let mut cur: Option<Vec<f64>> = None;
    for axis in (0..shape.len()).rev() {
        if keep.contains(&axis) {
            continue;
        }
        let buf = cur.as_deref().unwrap_or(data);
        let (s, d) = reduce_axis(&cur_shape, buf, axis, &x[axis]);
        cur_shape = s;
        cur = Some(d);
    }
    (cur_shape, cur.unwrap_or_else(|| data.to_vec()))
}

/// Row-major odometer over joint indices of a shape.
#[derive(Debug, Clone)]
pub struct JointIndices {
    shape: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl JointIndices {
    pub fn new(shape: &[usize]) -> Self {
        let next = if shape.iter().all(|&m| m > 0) {
            Some(vec![0; shape.len()])
        } else {
            None
        };
        Self {
            shape: shape.to_vec(),
            next,
        }
    }
}

impl Iterator for JointIndices {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut axis = succ.len();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            succ[axis] += 1;
            if succ[axis] < self.shape[axis] {
                self.next = Some(succ);
                break;
            }
            succ[axis] = 0;
        }
        Some(current)
    }
}

/// Builds a tensor whose entry at `K` is `f(s[0][K_0], ..., s[N-1][K_{N-1}])`.
pub fn fill_from<F>(strategies: &[Vec<Vec<f64>>], mut f: F) -> Result<DenseTensor>
where
    F: FnMut(&[&[f64]]) -> f64,
{
    let shape: Vec<usize> = strategies.iter().map(Vec::len).collect();
    check_shape(&shape)?;
    let mut data = Vec::with_capacity(shape.iter().product());
    let mut pts: Vec<&[f64]> = Vec::with_capacity(shape.len());
    for k in JointIndices::new(&shape) {
        pts.clear();
        pts.extend(k.iter().enumerate().map(|(p, &kp)| strategies[p][kp].as_slice()));
        data.push(f(&pts));
    }
    DenseTensor::new(shape, data)
}
