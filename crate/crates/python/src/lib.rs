//! Python bindings: tensors, benchmark games, the tightening solver,
//! evaluation reports and the experiment runner.

use chance_gnep::harness::{random_start, trial_seed};
use chance_gnep::{
    evaluate, iterative_tighten, AugmentedGame, DenseTensor, EvaluationOptions, ExperimentConfig,
    MixProfile, Solution, StrategyProfile, TighteningConfig,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: chance_gnep::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Round-trips a serializable value through the `json` module.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Tensor", module = "pygnep", frozen)]
struct PyTensor {
    inner: DenseTensor,
}

#[pymethods]
impl PyTensor {
    #[new]
    fn new(shape: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        DenseTensor::new(shape, data).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn full_contract(&self, x: Vec<Vec<f64>>) -> PyResult<f64> {
        self.inner.full_contract(&x).map_err(err)
    }

    fn contract_except(&self, x: Vec<Vec<f64>>, axis: usize) -> PyResult<Vec<f64>> {
        self.inner.contract_except(&x, axis).map_err(err)
    }

    /// Row-major `m_i x m_j` block.
    fn contract_except_pair(&self, x: Vec<Vec<f64>>, i: usize, j: usize) -> PyResult<Vec<f64>> {
        self.inner.contract_except_pair(&x, i, j).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Tensor(shape={:?})", self.inner.shape())
    }
}

#[pyclass(name = "Solution", module = "pygnep", frozen)]
struct PySolution {
    inner: Solution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.inner.x.0.clone()
    }

    #[getter]
    fn s(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.s.0.clone()
    }

    #[getter]
    fn lambda_(&self) -> Vec<f64> {
        self.inner.lambda.clone()
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.inner.gamma.clone()
    }

    #[getter]
    fn omega_reached(&self) -> f64 {
        self.inner.omega_reached
    }

    #[getter]
    fn solved(&self) -> bool {
        self.inner.solved()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(solved={}, omega_reached={})",
            self.inner.solved(),
            self.inner.omega_reached
        )
    }
}

/// A benchmark game built from a flat `key = value` configuration.
#[pyclass(name = "Experiment", module = "pygnep", frozen)]
struct PyExperiment {
    cfg: ExperimentConfig,
    game: AugmentedGame,
}

#[pymethods]
impl PyExperiment {
    #[new]
    #[pyo3(signature = (config = ""))]
    fn new(config: &str) -> PyResult<Self> {
        let cfg = ExperimentConfig::parse(config).map_err(err)?;
        cfg.validate().map_err(err)?;
        let game = cfg.build_game(cfg.epsilon).map_err(err)?;
        Ok(Self { cfg, game })
    }

    #[getter]
    fn counts(&self) -> Vec<usize> {
        self.game.counts.clone()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.cfg.epsilon
    }

    /// Tightening from the seeded random start of trial `trial_id`, or from
    /// explicit weights and strategies.
    #[pyo3(signature = (trial_id = 0, x0 = None, s0 = None))]
    fn solve(
        &self,
        py: Python<'_>,
        trial_id: usize,
        x0: Option<Vec<Vec<f64>>>,
        s0: Option<Vec<Vec<Vec<f64>>>>,
    ) -> PyResult<PySolution> {
        let seed = trial_seed(self.cfg.seed, trial_id);
        let (rx, rs) = random_start(&self.game, self.cfg.init_range, seed);
        let x = match x0 {
            Some(x) => MixProfile::new(x).map_err(err)?,
            None => rx,
        };
        let s = s0.map_or(rs, StrategyProfile);
        let mut t: TighteningConfig = self.cfg.tightening;
        t.solver.seed = seed;
        let game = &self.game;
        py.detach(|| iterative_tighten(game, &x, &s, &t))
            .map(|inner| PySolution { inner })
            .map_err(err)
    }

    /// Evaluation report as a dict; `probe_trials = 0` skips the probe.
    #[pyo3(signature = (solution, probe_trials = 0, probe_seed = 0))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        solution: &PySolution,
        probe_trials: usize,
        probe_seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = EvaluationOptions {
            support_threshold: self.cfg.support_threshold,
            probe_trials,
            probe_seed,
        };
        let report = evaluate(&self.game, &solution.inner, &self.cfg.pairs(&self.game), &opts)
            .map_err(err)?;
        to_py(py, &report)
    }

    /// Runs the configured trials; returns `(records, summaries)` as dicts.
    fn run_bulk<'py>(&self, py: Python<'py>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
        let cfg = &self.cfg;
        let res = py.detach(|| chance_gnep::run_bulk(cfg)).map_err(err)?;
        Ok((to_py(py, &res.records)?, to_py(py, &res.summaries)?))
    }
}

/// Probability that the strict constraint holds, by enumeration.
#[pyfunction]
fn realized_feasibility(
    experiment: &PyExperiment,
    solution: &PySolution,
    constraint: usize,
) -> PyResult<f64> {
    let (_, g) = experiment
        .game
        .constraints
        .get(constraint)
        .ok_or_else(|| PyValueError::new_err(format!("no constraint {constraint}")))?;
    Ok(chance_gnep::realized_feasibility(&solution.inner.x, &solution.inner.s, g))
}

#[pyfunction]
fn spearman(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(PyValueError::new_err("need two sequences of equal length >= 2"));
    }
    Ok(chance_gnep::spearman(&a, &b))
}

#[pymodule]
fn pygnep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(realized_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    Ok(())
}
