use std::path::PathBuf;
use std::process::ExitCode;

use chance_gnep::harness::{self, write_bench, write_bulk, write_sweep_omega};
use chance_gnep::{
    evaluate, Error, EvaluationOptions, EvaluationReport, ExperimentConfig, SolutionStatus,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "chance-gnep", version, about = "Solve chance-constrained tensor games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single seeded run, written as solution.json
    Solve(Common),
    /// Randomized trials at one confidence level
    Bulk(Common),
    /// Bulk runs over sweep.epsilons
    SweepEps(Common),
    /// Per-stage constraint distances over sweep.epsilons
    SweepOmega(Common),
    /// Chain-scenario timing grid
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
            cfg.bench_repeats = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct SolutionDump {
    scenario: &'static str,
    epsilon: f64,
    seed: u64,
    x: Vec<Vec<f64>>,
    s: Vec<Vec<Vec<f64>>>,
    lambda: Vec<f64>,
    gamma: Vec<f64>,
    omega_reached: f64,
    status: SolutionStatus,
    report: EvaluationReport,
}

enum Outcome {
    Done,
    AllFailed,
}

fn run(cmd: &Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Solve(c) => {
            let cfg = c.load()?;
            let game = cfg.build_game(cfg.epsilon)?;
            let (rec, sol) = harness::run_trial(&cfg, &game, cfg.epsilon, 0)?;
            let opts = EvaluationOptions {
                support_threshold: cfg.support_threshold,
                probe_seed: rec.seed,
                ..EvaluationOptions::default()
            };
            let report = evaluate(&game, &sol, &cfg.pairs(&game), &opts)?;
            let dump = SolutionDump {
                scenario: cfg.scenario.name(),
                epsilon: cfg.epsilon,
                seed: rec.seed,
                x: sol.x.0.clone(),
                s: sol.s.0.clone(),
                lambda: sol.lambda.clone(),
                gamma: sol.gamma.clone(),
                omega_reached: sol.omega_reached,
                status: sol.status,
                report,
            };
            std::fs::create_dir_all(&cfg.output_dir)?;
            let body = serde_json::to_string_pretty(&dump)
                .map_err(|e| Error::Io(e.to_string()))?;
            std::fs::write(cfg.output_dir.join("solution.json"), body + "\n")?;
            println!(
                "status {:?} omega {} time {:.1} ms",
                sol.status, sol.omega_reached, rec.time_ms
            );
            Ok(if sol.solved() { Outcome::Done } else { Outcome::AllFailed })
        }
        Command::Bulk(c) | Command::SweepEps(c) => {
            let cfg = c.load()?;
            let res = if matches!(cmd, Command::Bulk(_)) {
                harness::run_bulk(&cfg)?
            } else {
                harness::sweep_epsilon(&cfg, &cfg.sweep_epsilons)?
            };
            write_bulk(&cfg.output_dir, &res)?;
            for s in &res.summaries {
                println!(
                    "epsilon {} solved {}/{} feasibility {:?} mean time {:.1} ms",
                    s.epsilon, s.solved, s.trials, s.mean_feasibility, s.mean_time_ms
                );
            }
            Ok(if res.all_failed() { Outcome::AllFailed } else { Outcome::Done })
        }
        Command::SweepOmega(c) => {
            let cfg = c.load()?;
            let (res, rows) = harness::sweep_omega(&cfg, &cfg.sweep_epsilons)?;
            write_sweep_omega(&cfg.output_dir, &res, &rows)?;
            for r in &rows {
                println!("epsilon {} omega {} mean distance {:.4}", r.epsilon, r.omega, r.mean_distance);
            }
            Ok(if res.all_failed() { Outcome::AllFailed } else { Outcome::Done })
        }
        Command::Bench(c) => {
            let cfg = c.load()?;
            let rows = harness::bench_chain(
                &cfg,
                &cfg.bench_players,
                &cfg.bench_strategies,
                cfg.bench_repeats,
            )?;
            write_bench(&cfg.output_dir, &rows)?;
            for r in &rows {
                println!(
                    "N {} m {} solved {}/{} {:.1} +- {:.1} ms",
                    r.players, r.strategies, r.solved, r.repeats, r.mean_ms, r.ci95_ms
                );
            }
            Ok(if rows.iter().all(|r| r.solved == 0) {
                Outcome::AllFailed
            } else {
                Outcome::Done
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::AllFailed) => {
            eprintln!("error: no trial solved");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
