//! Experiment runner: flat key-value configuration, seeded randomized trials,
//! parameter sweeps, timing benchmarks and CSV emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    dirichlet_one, expected_cost, min_supported_distance, realized_feasibility,
    DEFAULT_SUPPORT_THRESHOLD,
};
use crate::game::{AugmentedGame, ConstraintMode, IndicatorConfig, MixProfile, StrategyProfile};
use crate::mcp::SolverOptions;
use crate::scenarios::{ChainParams, HprParams, Scenario, StationaryHogParams};
use crate::tightening::{iterative_tighten, Solution, TighteningConfig};

/// Tensors larger than this are rejected before a benchmark starts.
pub const MAX_BENCH_ENTRIES: usize = 10_000_000;

/// Distance from the box boundary under which a strategy counts as on it.
pub const BORDER_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub mode: ConstraintMode,
    /// Chance confidence, or the expected-value bound in expectation mode.
    pub epsilon: f64,
    pub tightening: TighteningConfig,
    pub trials: usize,
    pub seed: u64,
    /// Sampling range for initial strategies; the scenario box when unset.
    pub init_range: Option<(f64, f64)>,
    pub output_dir: PathBuf,
    pub support_threshold: f64,
    pub sweep_epsilons: Vec<f64>,
    pub bench_players: Vec<usize>,
    pub bench_strategies: Vec<usize>,
    pub bench_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::HogPoacherRanger(HprParams::default()),
            mode: ConstraintMode::Chance,
            epsilon: 0.8,
            tightening: TighteningConfig::default(),
            trials: 100,
            seed: 0,
            init_range: None,
            output_dir: PathBuf::from("out"),
            support_threshold: DEFAULT_SUPPORT_THRESHOLD,
            sweep_epsilons: vec![0.2, 0.35, 0.65, 0.8],
            bench_players: vec![2, 3, 4, 5],
            bench_strategies: vec![2, 3],
            bench_repeats: 10,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_num(key, t))
        .collect()
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>(key, v)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(Error::Config(format!("{key}: expected two values, got {v:?}"))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys not given keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut cfg = Self::default();

        let name = kv.remove("scenario.name").unwrap_or_else(|| "hpr".into());
        let r = kv.remove("scenario.r").map(|v| parse_num("scenario.r", &v)).transpose()?;
        let bx = kv
            .remove("scenario.box")
            .map(|v| parse_pair("scenario.box", &v))
            .transpose()?;
        let counts = kv
            .remove("scenario.counts")
            .map(|v| parse_list::<usize>("scenario.counts", &v))
            .transpose()?;
        cfg.scenario = match name.as_str() {
            "hpr" => {
                let mut p = HprParams::default();
                if let Some(r) = r {
                    p.r = r;
                }
                if let Some((lo, hi)) = bx {
                    (p.box_lower, p.box_upper) = (lo, hi);
                }
                if let Some(c) = counts {
                    p.counts = c.try_into().map_err(|_| {
                        Error::Config("scenario.counts: hpr needs three counts".into())
                    })?;
                }
                Scenario::HogPoacherRanger(p)
            }
            "chain" => {
                let mut p = ChainParams::default();
                if let Some(r) = r {
                    p.r = r;
                }
                if let Some((lo, hi)) = bx {
                    (p.box_lower, p.box_upper) = (lo, hi);
                }
                if let Some(v) = kv.remove("scenario.players") {
                    p.n_players = parse_num("scenario.players", &v)?;
                }
                if let Some(v) = kv.remove("scenario.strategies") {
                    p.strategies = parse_num("scenario.strategies", &v)?;
                }
                Scenario::Chain(p)
            }
            "stationary_hog" => {
                let mut p = StationaryHogParams::default();
                if let Some(r) = r {
                    p.r = r;
                }
                if let Some((lo, hi)) = bx {
                    (p.box_lower, p.box_upper) = (lo, hi);
                }
                if let Some(c) = counts {
                    p.counts = c.try_into().map_err(|_| {
                        Error::Config("scenario.counts: stationary_hog needs two counts".into())
                    })?;
                }
                if let Some(v) = kv.remove("scenario.hog") {
                    let (a, b) = parse_pair("scenario.hog", &v)?;
                    p.hog = [a, b];
                }
                Scenario::StationaryHog(p)
            }
            other => return Err(Error::Config(format!("unknown scenario {other:?}"))),
        };

        if let Some(v) = kv.remove("constraint.mode") {
            cfg.mode = match v.as_str() {
                "chance" => ConstraintMode::Chance,
                "expectation" => ConstraintMode::Expectation,
                other => return Err(Error::Config(format!("unknown constraint mode {other:?}"))),
            };
        }
        let chance_eps = kv.remove("chance.epsilon");
        let exp_eps = kv.remove("expectation.epsilon");
        cfg.epsilon = match cfg.mode {
            ConstraintMode::Chance => chance_eps
                .map(|v| parse_num("chance.epsilon", &v))
                .transpose()?
                .unwrap_or(0.8),
            ConstraintMode::Expectation => exp_eps
                .map(|v| parse_num("expectation.epsilon", &v))
                .transpose()?
                .unwrap_or(0.0),
        };

        let t = &mut cfg.tightening;
        let s: &mut SolverOptions = &mut t.solver;
        for (key, slot) in [
            ("tightening.omega0", &mut t.omega_start),
            ("tightening.omega_des", &mut t.omega_desired),
            ("tightening.omega_min_accept", &mut t.omega_min_accept),
            ("solver.tolerance", &mut s.tolerance),
            ("solver.perturbation", &mut s.perturbation),
            ("solver.smoothing", &mut s.smoothing),
        ] {
            if let Some(v) = kv.remove(key) {
                *slot = parse_num(key, &v)?;
            }
        }
        for (key, slot) in [
            ("solver.max_iterations", &mut s.max_iterations),
            ("solver.max_restarts", &mut s.max_restarts),
            ("trials", &mut cfg.trials),
            ("bench.repeats", &mut cfg.bench_repeats),
        ] {
            if let Some(v) = kv.remove(key) {
                *slot = parse_num(key, &v)?;
            }
        }
        if let Some(v) = kv.remove("seed") {
            cfg.seed = parse_num("seed", &v)?;
        }
        if let Some(v) = kv.remove("init.range") {
            cfg.init_range = Some(parse_pair("init.range", &v)?);
        }
        if let Some(v) = kv.remove("output.dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = kv.remove("evaluation.support_threshold") {
            cfg.support_threshold = parse_num("evaluation.support_threshold", &v)?;
        }
        if let Some(v) = kv.remove("sweep.epsilons") {
            cfg.sweep_epsilons = parse_list("sweep.epsilons", &v)?;
        }
        if let Some(v) = kv.remove("bench.players") {
            cfg.bench_players = parse_list("bench.players", &v)?;
        }
        if let Some(v) = kv.remove("bench.strategies") {
            cfg.bench_strategies = parse_list("bench.strategies", &v)?;
        }
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.mode == ConstraintMode::Chance {
            check_confidence(self.epsilon)?;
            for &e in &self.sweep_epsilons {
                check_confidence(e)?;
            }
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1.0) {
            return Err(Error::Config("support threshold must be in (0, 1)".into()));
        }
        if let Some((lo, hi)) = self.init_range {
            if !(lo < hi) {
                return Err(Error::Config(format!("empty init range [{lo}, {hi}]")));
            }
        }
        self.tightening
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.build_game(self.epsilon)
            .map(|_| ())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn indicator(&self) -> IndicatorConfig {
        match self.mode {
            ConstraintMode::Chance => IndicatorConfig::chance(self.tightening.omega_start)
                .expect("validated strictness"),
            ConstraintMode::Expectation => IndicatorConfig::expectation(),
        }
    }

    pub fn build_game(&self, epsilon: f64) -> Result<AugmentedGame> {
        self.scenario.build(self.indicator(), epsilon)
    }

    pub fn pairs(&self, game: &AugmentedGame) -> Vec<Option<(usize, usize)>> {
        (0..game.constraints.len())
            .map(|j| self.scenario.constraint_pair(j))
            .collect()
    }
}

fn check_confidence(e: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::Config(format!("chance epsilon {e} outside [0, 1]")));
    }
    Ok(())
}

/// Seed of trial `id` under `master`: the first word of the ChaCha stream
/// numbered `id`.
pub fn trial_seed(master: u64, id: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id as u64);
    rng.next_u64()
}

/// Dirichlet(1) weights and uniform strategies inside `range` (or each
/// player's box).
pub fn random_start(
    game: &AugmentedGame,
    range: Option<(f64, f64)>,
    seed: u64,
) -> (MixProfile, StrategyProfile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = game.counts.iter().map(|&m| dirichlet_one(&mut rng, m)).collect();
    let s = game
        .counts
        .iter()
        .zip(&game.boxes)
        .map(|(&m, b)| {
            (0..m)
                .map(|_| {
                    (0..b.dim())
                        .map(|d| {
                            let (lo, hi) = range
                                .map(|(lo, hi)| (lo.max(b.lower[d]), hi.min(b.upper[d])))
                                .unwrap_or((b.lower[d], b.upper[d]));
                            if lo < hi {
                                rng.random_range(lo..hi)
                            } else {
                                lo
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    (MixProfile(x), StrategyProfile(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub epsilon: f64,
    pub trial_id: usize,
    pub seed: u64,
    pub solved: bool,
    pub omega_reached: f64,
    pub costs: Vec<f64>,
    pub feasibility: Vec<f64>,
    /// Mixing weights of the scenario's focus player.
    pub weights: Vec<f64>,
    pub min_distances: Vec<Option<f64>>,
    /// Some focus-player strategy lies within `BORDER_TOL` of its box.
    pub on_border: bool,
    /// `(omega, min distance of constraint 0)` after each converged stage.
    pub stage_distances: Vec<(f64, Option<f64>)>,
    pub time_ms: f64,
}

fn distances(
    pairs: &[Option<(usize, usize)>],
    x: &MixProfile,
    s: &StrategyProfile,
    threshold: f64,
) -> Vec<Option<f64>> {
    pairs
        .iter()
        .map(|p| p.and_then(|p| min_supported_distance(x, s, p, threshold).ok()))
        .collect()
}

/// Runs and evaluates one seeded trial.
pub fn run_trial(
    cfg: &ExperimentConfig,
    game: &AugmentedGame,
    epsilon: f64,
    trial_id: usize,
) -> Result<(TrialRecord, Solution)> {
    let seed = trial_seed(cfg.seed, trial_id);
    let (x0, s0) = random_start(game, cfg.init_range, seed);
    let mut tcfg = cfg.tightening;
    tcfg.solver.seed = seed;
    let t0 = Instant::now();
    let sol = iterative_tighten(game, &x0, &s0, &tcfg)?;
    let time_ms = t0.elapsed().as_secs_f64() * 1e3;

    let pairs = cfg.pairs(game);
    let focus = cfg.scenario.focus_player();
    let costs = game
        .costs
        .iter()
        .map(|f| expected_cost(&sol.x, &sol.s, f))
        .collect::<Result<_>>()?;
    let feasibility = game
        .constraints
        .iter()
        .map(|(_, g)| realized_feasibility(&sol.x, &sol.s, g))
        .collect();
    let on_border = sol.s.0[focus]
        .iter()
        .any(|p| game.boxes[focus].boundary_distance(p) < BORDER_TOL);
    let stage_distances = sol
        .stages
        .iter()
        .map(|st| {
            let d = distances(&pairs[..pairs.len().min(1)], &st.x, &st.s, cfg.support_threshold);
            (st.omega, d.first().copied().flatten())
        })
        .collect();
    let record = TrialRecord {
        epsilon,
        trial_id,
        seed,
        solved: sol.solved(),
        omega_reached: sol.omega_reached,
        costs,
        feasibility,
        weights: sol.x.0[focus].clone(),
        min_distances: distances(&pairs, &sol.x, &sol.s, cfg.support_threshold),
        on_border,
        stage_distances,
        time_ms,
    };
    Ok((record, sol))
}

/// Runs `cfg.trials` trials at `epsilon` in parallel, ordered by trial id.
pub fn run_trials(cfg: &ExperimentConfig, epsilon: f64) -> Result<Vec<TrialRecord>> {
    let game = cfg.build_game(epsilon)?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|id| run_trial(cfg, &game, epsilon, id).map(|(r, _)| r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub epsilon: f64,
    pub trials: usize,
    pub solved: usize,
    /// Means below are over solved trials only.
    pub mean_costs: Vec<f64>,
    pub mean_feasibility: Vec<f64>,
    /// Focus-player weights sorted in decreasing order, then averaged.
    pub mean_sorted_weights: Vec<f64>,
    pub mean_min_distances: Vec<f64>,
    pub border_fraction: f64,
    pub mean_time_ms: f64,
}

impl Summary {
    pub fn pct_solved(&self) -> f64 {
        100.0 * self.solved as f64 / self.trials as f64
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), a| (s + a, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn column_means(rows: &[&Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    (0..width).map(|c| mean(rows.iter().map(|r| r[c]))).collect()
}

pub fn summarize(epsilon: f64, records: &[TrialRecord]) -> Summary {
    let solved: Vec<&TrialRecord> = records.iter().filter(|r| r.solved).collect();
    let sorted: Vec<Vec<f64>> = solved
        .iter()
        .map(|r| {
            let mut w = r.weights.clone();
            w.sort_by(|a, b| b.total_cmp(a));
            w
        })
        .collect();
    let n_dist = records.first().map_or(0, |r| r.min_distances.len());
    Summary {
        epsilon,
        trials: records.len(),
        solved: solved.len(),
        mean_costs: column_means(&solved.iter().map(|r| &r.costs).collect::<Vec<_>>()),
        mean_feasibility: column_means(
            &solved.iter().map(|r| &r.feasibility).collect::<Vec<_>>(),
        ),
        mean_sorted_weights: column_means(&sorted.iter().collect::<Vec<_>>()),
        mean_min_distances: (0..n_dist)
            .map(|j| mean(solved.iter().filter_map(|r| r.min_distances[j])))
            .collect(),
        border_fraction: mean(solved.iter().map(|r| f64::from(u8::from(r.on_border)))),
        mean_time_ms: mean(records.iter().map(|r| r.time_ms)),
    }
}

/// Six significant digits; empty for missing values.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn header(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i}")).collect()
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let first = records.first();
    let mut cols: Vec<String> = ["epsilon", "trial_id", "seed", "status", "omega_reached"]
        .map(String::from)
        .to_vec();
    cols.extend(header("cost", first.map_or(0, |r| r.costs.len())));
    cols.extend(header("feasibility", first.map_or(0, |r| r.feasibility.len())));
    cols.extend(header("weight", first.map_or(0, |r| r.weights.len())));
    cols.extend(header("min_distance", first.map_or(0, |r| r.min_distances.len())));
    cols.push("on_border".into());
    let mut out = cols.join(",") + "\n";
    for r in records {
        let mut row = vec![
            fmt_num(r.epsilon),
            r.trial_id.to_string(),
            r.seed.to_string(),
            if r.solved { "solved" } else { "failed_at_omega" }.to_string(),
            fmt_num(r.omega_reached),
        ];
        row.extend(r.costs.iter().map(|&v| fmt_num(v)));
        row.extend(r.feasibility.iter().map(|&v| fmt_num(v)));
        row.extend(r.weights.iter().map(|&v| fmt_num(v)));
        row.extend(r.min_distances.iter().map(|&v| fmt_opt(v)));
        row.push(u8::from(r.on_border).to_string());
        out += &(row.join(",") + "\n");
    }
    out
}

/// Aggregates without wall-clock columns, so reruns are byte-identical.
pub fn summary_csv(rows: &[Summary]) -> String {
    let first = rows.first();
    let mut cols: Vec<String> = ["epsilon", "trials", "solved", "pct_solved"]
        .map(String::from)
        .to_vec();
    cols.extend(header("mean_cost", first.map_or(0, |r| r.mean_costs.len())));
    cols.extend(header("mean_feasibility", first.map_or(0, |r| r.mean_feasibility.len())));
    cols.extend(header("mean_weight", first.map_or(0, |r| r.mean_sorted_weights.len())));
    cols.extend(header(
        "mean_min_distance",
        first.map_or(0, |r| r.mean_min_distances.len()),
    ));
    cols.push("border_fraction".into());
    let mut out = cols.join(",") + "\n";
    for s in rows {
        let mut row = vec![
            fmt_num(s.epsilon),
            s.trials.to_string(),
            s.solved.to_string(),
            fmt_num(s.pct_solved()),
        ];
        for v in [
            &s.mean_costs,
            &s.mean_feasibility,
            &s.mean_sorted_weights,
            &s.mean_min_distances,
        ] {
            row.extend(v.iter().map(|&a| fmt_num(a)));
        }
        row.push(fmt_num(s.border_fraction));
        out += &(row.join(",") + "\n");
    }
    out
}

pub fn timings_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("epsilon,trial_id,time_ms\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", fmt_num(r.epsilon), r.trial_id, fmt_num(r.time_ms));
    }
    out
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BulkResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<Summary>,
}

impl BulkResult {
    pub fn all_failed(&self) -> bool {
        self.records.iter().all(|r| !r.solved)
    }
}

pub fn run_bulk(cfg: &ExperimentConfig) -> Result<BulkResult> {
    cfg.validate()?;
    let records = run_trials(cfg, cfg.epsilon)?;
    let summaries = vec![summarize(cfg.epsilon, &records)];
    Ok(BulkResult { records, summaries })
}

/// One bulk run per epsilon with the same trial seeds.
pub fn sweep_epsilon(cfg: &ExperimentConfig, epsilons: &[f64]) -> Result<BulkResult> {
    cfg.validate()?;
    if cfg.mode == ConstraintMode::Chance {
        for &e in epsilons {
            check_confidence(e)?;
        }
    }
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &e in epsilons {
        let r = run_trials(cfg, e)?;
        summaries.push(summarize(e, &r));
        records.extend(r);
    }
    Ok(BulkResult { records, summaries })
}

pub fn write_bulk(dir: &Path, res: &BulkResult) -> Result<()> {
    write_outputs(
        dir,
        &[
            ("trials.csv", trials_csv(&res.records)),
            ("summary.csv", summary_csv(&res.summaries)),
            ("timings.csv", timings_csv(&res.records)),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaRow {
    pub epsilon: f64,
    pub omega: f64,
    /// Solved trials contributing a distance at this stage.
    pub count: usize,
    pub mean_distance: f64,
}

/// Mean minimum supported distance of constraint 0 after each stage of the
/// doubling schedule, over solved trials.
pub fn omega_table(records: &[TrialRecord], schedule: &[f64]) -> Vec<OmegaRow> {
    let mut eps: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    eps.dedup();
    let mut rows = Vec::new();
    for &e in &eps {
        for &w in schedule {
            let d: Vec<f64> = records
                .iter()
                .filter(|r| r.epsilon == e && r.solved)
                .filter_map(|r| r.stage_distances.iter().find(|st| st.0 == w)?.1)
                .collect();
            rows.push(OmegaRow {
                epsilon: e,
                omega: w,
                count: d.len(),
                mean_distance: mean(d.into_iter()),
            });
        }
    }
    rows
}

pub fn sweep_omega(cfg: &ExperimentConfig, epsilons: &[f64]) -> Result<(BulkResult, Vec<OmegaRow>)> {
    if cfg.mode != ConstraintMode::Chance {
        return Err(Error::Config("omega sweeps need chance mode".into()));
    }
    let res = sweep_epsilon(cfg, epsilons)?;
    let table = omega_table(&res.records, &cfg.tightening.schedule());
    Ok((res, table))
}

pub fn omega_csv(rows: &[OmegaRow]) -> String {
    let mut out = String::from("epsilon,omega,count,mean_distance\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(r.epsilon),
            fmt_num(r.omega),
            r.count,
            fmt_num(r.mean_distance)
        );
    }
    out
}

pub fn write_sweep_omega(dir: &Path, res: &BulkResult, rows: &[OmegaRow]) -> Result<()> {
    write_bulk(dir, res)?;
    write_outputs(dir, &[("sweep_omega.csv", omega_csv(rows))])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub players: usize,
    pub strategies: usize,
    /// Entries of one joint tensor, `m^N`.
    pub entries: usize,
    pub repeats: usize,
    pub solved: usize,
    pub mean_ms: f64,
    /// Half-width of the normal 95% interval from the standard error.
    pub ci95_ms: f64,
}

impl BenchRow {
    pub fn pct_solved(&self) -> f64 {
        100.0 * self.solved as f64 / self.repeats as f64
    }
}

fn tensor_entries(n: usize, m: usize) -> Option<usize> {
    u32::try_from(n).ok().and_then(|n| m.checked_pow(n))
}

/// Times the chain scenario over the grid `players x strategies`, serially.
pub fn bench_chain(
    cfg: &ExperimentConfig,
    players: &[usize],
    strategies: &[usize],
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(Error::Config("bench repeats must be at least 1".into()));
    }
    let base = match &cfg.scenario {
        Scenario::Chain(p) => p.clone(),
        _ => ChainParams::default(),
    };
    for &n in players {
        for &m in strategies {
            if n < 2 || m < 2 {
                return Err(Error::Config(format!("bench needs N >= 2 and m >= 2, got ({n}, {m})")));
            }
            match tensor_entries(n, m) {
                Some(e) if e <= MAX_BENCH_ENTRIES => {}
                _ => {
                    return Err(Error::Config(format!(
                        "N = {n}, m = {m} exceeds {MAX_BENCH_ENTRIES} tensor entries"
                    )))
                }
            }
        }
    }
    let mut rows = Vec::new();
    for &n in players {
        for &m in strategies {
            let mut c = cfg.clone();
            c.scenario = Scenario::Chain(ChainParams {
                n_players: n,
                strategies: m,
                ..base.clone()
            });
            let game = c.build_game(c.epsilon)?;
            let mut times = Vec::with_capacity(repeats);
            let mut solved = 0;
            for id in 0..repeats {
                let seed = trial_seed(c.seed, id);
                let (x0, s0) = random_start(&game, c.init_range, seed);
                let mut t = c.tightening;
                t.solver.seed = seed;
                let t0 = Instant::now();
                let sol = iterative_tighten(&game, &x0, &s0, &t)?;
                times.push(t0.elapsed().as_secs_f64() * 1e3);
                solved += usize::from(sol.solved());
            }
            let mu = mean(times.iter().copied());
            let ci = if repeats > 1 {
                let var = times.iter().map(|t| (t - mu).powi(2)).sum::<f64>() / (repeats - 1) as f64;
                1.96 * (var / repeats as f64).sqrt()
            } else {
                0.0
            };
            rows.push(BenchRow {
                players: n,
                strategies: m,
                entries: tensor_entries(n, m).expect("checked above"),
                repeats,
                solved,
                mean_ms: mu,
                ci95_ms: ci,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("players,strategies,entries,repeats,solved,pct_solved,mean_ms,ci95_ms\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.players,
            r.strategies,
            r.entries,
            r.repeats,
            r.solved,
            fmt_num(r.pct_solved()),
            fmt_num(r.mean_ms),
            fmt_num(r.ci95_ms)
        );
    }
    out
}

pub fn write_bench(dir: &Path, rows: &[BenchRow]) -> Result<()> {
    write_outputs(dir, &[("bench.csv", bench_csv(rows))])
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, mb) = (mean(ra.iter().copied()), mean(rb.iter().copied()));
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
