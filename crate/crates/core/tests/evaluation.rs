mod common;

use chance_gnep::harness::{random_start, trial_seed};
use chance_gnep::{
    evaluate, expected_cost, hog_poacher_ranger, improvement_probe, iterative_tighten, kkt_residual,
    min_supported_distance, realized_feasibility, AugmentedGame, EvaluationOptions, HprParams,
    IndicatorConfig, MixProfile, Solution, StrategyProfile, TighteningConfig,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hpr() -> AugmentedGame {
    hog_poacher_ranger(&HprParams::default(), IndicatorConfig::chance(1.0).unwrap(), 0.8).unwrap()
}

fn solved_hpr(game: &AugmentedGame) -> Solution {
    let cfg = TighteningConfig::default();
    (0..20)
        .map(|id| {
            let seed = trial_seed(0, id);
            let (x0, s0) = random_start(game, None, seed);
            let mut c = cfg;
            c.solver.seed = seed;
            iterative_tighten(game, &x0, &s0, &c).unwrap()
        })
        .find(Solution::solved)
        .expect("some seeded HPR start solves")
}

#[test]
fn feasibility_agrees_with_monte_carlo() {
    let game = hpr();
    let g = &game.constraints[0].1;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let counts = [2, 3, 2];
    let x = random_mix(&mut rng, &counts);
    let s = random_strategies(&mut rng, &counts, 2, -1.0, 1.0);
    let exact = realized_feasibility(&x, &s, g);

    let draws = 1_000_000;
    let mut hits = 0usize;
    let mut k = vec![0; 3];
    for _ in 0..draws {
        for (p, w) in x.0.iter().enumerate() {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            k[p] = w.len() - 1;
            for (j, v) in w.iter().enumerate() {
                acc += v;
                if u < acc {
                    k[p] = j;
                    break;
                }
            }
        }
        hits += usize::from(g.value(&joint_point(&s, &k)) >= 0.0);
    }
    let p = hits as f64 / draws as f64;
    let sigma = (exact * (1.0 - exact) / draws as f64).sqrt().max(1e-9);
    assert!(
        (p - exact).abs() <= 3.0 * sigma,
        "monte carlo {p} vs exact {exact} (sigma {sigma})"
    );
}

#[test]
fn feasibility_ignores_strategy_order() {
    let game = hpr();
    let g = &game.constraints[0].1;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let counts = [3, 3, 3];
        let x = random_mix(&mut rng, &counts);
        let s = random_strategies(&mut rng, &counts, 2, -2.0, 2.0);
        let mut px = x.clone();
        let mut ps = s.clone();
        px.0[1].reverse();
        ps.0[1].reverse();
        px.0[2].rotate_left(1);
        ps.0[2].rotate_left(1);
        let (a, b) = (realized_feasibility(&x, &s, g), realized_feasibility(&px, &ps, g));
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn half_mass_on_violating_strategy() {
    let game = hpr();
    let x = MixProfile::new(vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
    let s = StrategyProfile(vec![
        vec![vec![0.0, 0.0]; 2],
        vec![vec![0.0, 0.0], vec![1.5, 0.0]],
        vec![vec![0.2, 0.0]; 2],
    ]);
    assert_eq!(realized_feasibility(&x, &s, &game.constraints[0].1), 0.5);
}

#[test]
fn softened_satisfaction_approaches_exact_feasibility() {
    let base = hpr();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let counts = [2, 2, 2];
        let x = random_mix(&mut rng, &counts);
        let s = random_strategies(&mut rng, &counts, 2, -2.0, 2.0);
        let exact = realized_feasibility(&x, &s, &base.constraints[0].1);
        let mut last = f64::INFINITY;
        for omega in [8.0, 64.0, 512.0] {
            let lifted = base
                .with_indicator(IndicatorConfig::chance(omega).unwrap())
                .unwrap()
                .lift(&s)
                .unwrap();
            let gap = (lifted.constraint_satisfaction(&x, 0).unwrap() - exact).abs();
            assert!(gap <= last + 1e-15, "gap grew to {gap} at omega {omega}");
            last = gap;
        }
    }
}

#[test]
fn costs_and_distances_match_enumeration() {
    let game = hpr();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let counts = [2, 3, 4];
        let x = random_mix(&mut rng, &counts);
        let s = random_strategies(&mut rng, &counts, 2, -2.0, 2.0);
        for f in &game.costs {
            let (a, b) = (expected_cost(&x, &s, f).unwrap(), enumerate_cost(&x, &s, f));
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let hog = expected_cost(&x, &s, &game.costs[0]).unwrap();
        let poacher = expected_cost(&x, &s, &game.costs[1]).unwrap();
        assert!((hog + poacher).abs() < 1e-12);

        let threshold = 1e-3;
        let brute = joint_indices(&counts)
            .iter()
            .filter(|k| joint_prob(&x.0, k) > threshold)
            .map(|k| {
                let (p, q) = (&s.0[1][k[1]], &s.0[2][k[2]]);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        let d = min_supported_distance(&x, &s, (1, 2), threshold).unwrap();
        assert_eq!(d, brute);
    }
}

#[test]
fn converged_solution_has_small_residual_and_perturbation_raises_it() {
    let game = hpr();
    let sol = solved_hpr(&game);
    let base = kkt_residual(&sol, &game, sol.omega_reached).unwrap();
    assert!(base <= 1e-8, "residual {base}");
    let mut moved = sol.clone();
    moved.x.0[1][0] += 0.1;
    moved.x.0[1][1] -= 0.1;
    let bumped = kkt_residual(&moved, &game, sol.omega_reached).unwrap();
    assert!(bumped > base, "{bumped} <= {base}");
}

#[test]
fn probe_finds_improvement_only_off_equilibrium() {
    let game = hpr();
    let sol = solved_hpr(&game);
    let omega = sol.omega_reached;
    let at = improvement_probe(&sol, &game, omega, 300, 5).unwrap();

    // pull the poacher's strategies halfway toward the hog
    let mut off = sol.clone();
    for k in 0..2 {
        let hog = off.s.0[0][k].clone();
        for p in &mut off.s.0[1] {
            for (v, h) in p.iter_mut().zip(&hog) {
                *v += 0.5 * (h - *v);
            }
        }
    }
    let away = improvement_probe(&off, &game, omega, 300, 5).unwrap();
    assert!(away > at, "probe {away} off equilibrium vs {at} at it");
    assert!(away > 0.0);
}

#[test]
fn report_respects_invariants() {
    let game = hpr();
    let sol = solved_hpr(&game);
    let report = evaluate(&game, &sol, &[Some((1, 2))], &EvaluationOptions::default()).unwrap();
    assert!(report.feasibility.iter().all(|f| (0.0..=1.0).contains(f)));
    for (size, m) in report.support_sizes.iter().zip(&game.counts) {
        assert!((1..=*m).contains(size));
    }
    assert_eq!(report.expected_costs.len(), 3);
    assert!(report.min_distances[0].is_some());
    assert!(report.improvement.is_some());
}
