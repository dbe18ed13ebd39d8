mod common;

use common::{assert_matches_tabular_sarsa, chi_square_p, tiny_chain, value_iteration};
use proptest::prelude::*;
use stickyrl::agent::{run_for_frames, Agent};
use stickyrl::env::{make_env_str, make_env_with_cap, ActionId, Environment, GameSpec, Observation};
use stickyrl::rng::stream_rng;
use stickyrl::td_linear::{
    egreedy_action, features_for, FeatureMap, LinearLearner, SarsaAgent, SarsaConfig, SparseFeatures, Tabular,
};

fn obs(payload: Vec<i32>) -> Observation {
    Observation {
        payload,
        lives: None,
        score_delta: 0,
    }
}

fn phi(ix: &[usize]) -> SparseFeatures {
    SparseFeatures::new(ix.to_vec())
}

fn cfg(alpha: f64, gamma: f64, lambda: f64) -> SarsaConfig {
    SarsaConfig {
        alpha,
        gamma,
        lambda,
        ..SarsaConfig::default()
    }
}

#[test]
fn chain_features_are_one_hot() {
    let fmap = features_for("chain_walk:1:1".parse().unwrap()).unwrap();
    assert_eq!(fmap.dim(), 24);
    for p in 0..8 {
        for a in 0..3 {
            let f = fmap.features(&obs(vec![p]), ActionId(a));
            assert_eq!(f.indices(), &[p as usize * 3 + a]);
            assert_eq!(f, fmap.features(&obs(vec![p]), ActionId(a)));
        }
    }
}

#[test]
fn crossing_features_use_two_tiles() {
    let fmap = features_for("crossing:1:1".parse().unwrap()).unwrap();
    let f = fmap.features(&obs(vec![2, 3]), ActionId(1));
    assert_eq!(f.len(), 2);
    assert!(f.indices().iter().all(|&i| i < fmap.dim()));
    // same row, different phase: one shared tile
    let g = fmap.features(&obs(vec![2, 1]), ActionId(1));
    assert_eq!(f.indices()[0], g.indices()[0]);
    assert_ne!(f.indices()[1], g.indices()[1]);
}

#[test]
fn every_game_has_features() {
    for name in ["chain_walk", "cliff_corridor", "crossing", "key_door"] {
        for m in 1..=2 {
            for d in 1..=2 {
                let spec: GameSpec = format!("{name}:{m}:{d}").parse().unwrap();
                let fmap = features_for(spec).unwrap();
                let mut env = stickyrl::env::make_env(spec);
                assert_eq!(fmap.action_count(), env.action_count());
                let o = env.reset().unwrap();
                for a in 0..fmap.action_count() {
                    assert!(fmap.features(&o, ActionId(a)).indices().iter().all(|&i| i < fmap.dim()));
                }
            }
        }
    }
}

#[test]
fn sparse_features_are_sorted_and_unique() {
    assert_eq!(phi(&[5, 1, 5, 3]).indices(), &[1, 3, 5]);
}

#[test]
fn terminal_update_example() {
    let mut l = LinearLearner::new(4, cfg(0.5, 1.0, 0.0)).unwrap();
    let delta = l.update(&phi(&[2]), 1.0, None).unwrap();
    assert_eq!(delta, 1.0);
    assert_eq!(l.weights(), &[0.0, 0.0, 0.5, 0.0]);
}

#[test]
fn zero_error_still_accumulates_trace() {
    let mut l = LinearLearner::new(4, SarsaConfig::default()).unwrap();
    let delta = l.update(&phi(&[1]), 0.0, Some(&phi(&[2]))).unwrap();
    assert_eq!(delta, 0.0);
    assert!(l.weights().iter().all(|&w| w == 0.0));
    assert_eq!(l.trace().get(&1), Some(&1.0));
}

#[test]
fn trace_decays_by_gamma_lambda() {
    let mut l = LinearLearner::new(
        8,
        SarsaConfig {
            trace_threshold: 0.0,
            ..SarsaConfig::default()
        },
    )
    .unwrap();
    l.update(&phi(&[0]), 0.0, Some(&phi(&[1]))).unwrap();
    l.update(&phi(&[1]), 0.0, Some(&phi(&[2]))).unwrap();
    l.update(&phi(&[2]), 0.0, Some(&phi(&[3]))).unwrap();
    let e = l.trace();
    assert!((e[&0] - 0.793881).abs() < 1e-12);
    assert!((e[&1] - 0.891).abs() < 1e-12);
    assert_eq!(e[&2], 1.0);
}

#[test]
fn small_trace_entries_are_pruned() {
    let mut l = LinearLearner::new(4, cfg(0.5, 0.05, 0.1)).unwrap();
    l.update(&phi(&[0]), 0.0, Some(&phi(&[1]))).unwrap();
    l.update(&phi(&[1]), 0.0, Some(&phi(&[2]))).unwrap();
    assert!(!l.trace().contains_key(&0));
}

#[test]
fn step_size_is_normalized() {
    let mut l = LinearLearner::new(8, cfg(0.5, 1.0, 0.0)).unwrap();
    assert_eq!(l.effective_alpha(), 0.5);
    l.update(&phi(&[0, 1]), 1.0, None).unwrap();
    assert_eq!(l.max_active_seen(), 2);
    assert_eq!(l.weights()[..2], [0.25, 0.25]);
    l.update(&phi(&[3]), 0.0, None).unwrap();
    assert_eq!(l.effective_alpha(), 0.25);
}

#[test]
fn divergence_is_reported() {
    let mut l = LinearLearner::new(2, cfg(0.5, 1.0, 0.0)).unwrap();
    assert!(l.update(&phi(&[0]), f64::INFINITY, None).is_err());
}

#[test]
fn bad_config_is_rejected() {
    assert!(LinearLearner::new(2, cfg(0.0, 0.9, 0.9)).is_err());
    assert!(LinearLearner::new(2, cfg(0.1, 1.1, 0.9)).is_err());
    assert!(LinearLearner::new(
        2,
        SarsaConfig {
            epsilon: -0.1,
            ..SarsaConfig::default()
        }
    )
    .is_err());
}

#[test]
fn zero_weights_pick_uniformly() {
    let fmap = features_for("chain_walk:1:1".parse().unwrap()).unwrap();
    let l = LinearLearner::new(fmap.dim(), SarsaConfig::default()).unwrap();
    let mut rng = stream_rng(1, 0);
    for eps in [0.0, 1.0] {
        let mut counts = [0u64; 3];
        for _ in 0..10_000 {
            counts[egreedy_action(&l, fmap.as_ref(), &obs(vec![3]), eps, &mut rng).0] += 1;
        }
        assert!(chi_square_p(&counts) > 0.01, "{counts:?}");
    }
}

#[test]
fn greedy_without_exploration_is_deterministic() {
    let fmap = features_for("chain_walk:1:1".parse().unwrap()).unwrap();
    let mut l = LinearLearner::new(fmap.dim(), SarsaConfig::default()).unwrap();
    l.weights_mut()[3 * 3 + 1] = 0.7;
    l.weights_mut()[3 * 3 + 2] = 0.2;
    let mut rng = stream_rng(2, 0);
    for _ in 0..1_000 {
        assert_eq!(
            egreedy_action(&l, fmap.as_ref(), &obs(vec![3]), 0.0, &mut rng),
            ActionId(1)
        );
    }
    let mut counts = [0u64; 3];
    for _ in 0..10_000 {
        counts[egreedy_action(&l, fmap.as_ref(), &obs(vec![3]), 1.0, &mut rng).0] += 1;
    }
    assert!(chi_square_p(&counts) > 0.01, "{counts:?}");
}

#[test]
fn tabular_lambda_zero_reaches_value_iteration() {
    let gamma = 0.9;
    let oracle = value_iteration(gamma);
    let fmap = Tabular::new(3, 2, |p| p[0] as usize);
    let mut l = LinearLearner::new(fmap.dim(), cfg(0.5, gamma, 0.0)).unwrap();
    let features = |s: usize, a: usize| fmap.features(&obs(vec![s as i32]), ActionId(a));
    // sweep every pair, bootstrapping from the greedy successor action
    for _ in 0..200 {
        for s in 0..3 {
            for a in 0..2 {
                let (r, next) = tiny_chain(s, a);
                let next_phi = next.map(|n| {
                    let best = if l.value(&features(n, 1)) >= l.value(&features(n, 0)) {
                        1
                    } else {
                        0
                    };
                    features(n, best)
                });
                l.update(&features(s, a), r, next_phi.as_ref()).unwrap();
            }
        }
    }
    for (s, row) in oracle.iter().enumerate() {
        for (a, q) in row.iter().enumerate() {
            assert!((l.value(&features(s, a)) - q).abs() < 1e-2, "q({s},{a})");
        }
    }
    assert!((oracle[0][1] - 0.81).abs() < 1e-12);
}

#[test]
fn lambda_zero_equals_tabular_sarsa() {
    for seed in 0..5 {
        assert!(assert_matches_tabular_sarsa("chain_walk:2:1".parse().unwrap(), 16, seed, 50) > 0);
    }
}

/// Accumulating traces with a large step overshoot on self-loops, so a few
/// seeds settle on a greedy policy that stalls short of the goal.
#[test]
fn chain_walk_sarsa_is_optimal_after_twenty_thousand_frames() {
    let spec: GameSpec = "chain_walk:1:1".parse().unwrap();
    let optimal = (0..20)
        .filter(|&seed| {
            let c = SarsaConfig {
                gamma: 1.0,
                lambda: 0.9,
                ..SarsaConfig::default()
            };
            let mut agent = SarsaAgent::new(features_for(spec).unwrap(), c, stream_rng(seed, 0)).unwrap();
            let mut env = make_env_with_cap(spec, 500);
            run_for_frames(&mut agent, env.as_mut(), 20_000).unwrap();
            let mut o = env.reset().unwrap();
            let mut score = 0;
            loop {
                let r = env.step(agent.greedy(&o)).unwrap();
                score += r.observation.score_delta;
                if r.terminal {
                    return score == 1;
                }
                o = r.observation;
            }
        })
        .count();
    assert!(optimal >= 16, "{optimal}/20 optimal");
}

#[test]
fn zero_budget_runs_no_episodes() {
    let spec: GameSpec = "chain_walk:1:1".parse().unwrap();
    let mut agent = SarsaAgent::new(features_for(spec).unwrap(), SarsaConfig::default(), stream_rng(0, 0)).unwrap();
    let mut env = make_env_str("chain_walk:1:1").unwrap();
    assert!(run_for_frames(&mut agent, env.as_mut(), 0).unwrap().is_empty());
    assert!(agent.snapshot().weights.unwrap().iter().all(|&w| w == 0.0));
}

fn feature_steps() -> impl Strategy<Value = Vec<(Vec<usize>, i8)>> {
    proptest::collection::vec((proptest::collection::vec(0usize..12, 1..4), -3i8..4), 1..60)
}

proptest! {
    #[test]
    fn greedy_choice_ignores_positive_scale(weights in proptest::collection::vec(-5.0f64..5.0, 24), scale in 0.01f64..100.0, seed in any::<u64>()) {
        let fmap = features_for("chain_walk:1:1".parse().unwrap()).unwrap();
        let mut a = LinearLearner::new(24, SarsaConfig::default()).unwrap();
        let mut b = LinearLearner::new(24, SarsaConfig::default()).unwrap();
        a.weights_mut().copy_from_slice(&weights);
        for (w, x) in b.weights_mut().iter_mut().zip(&weights) {
            *w = x * scale;
        }
        let (mut ra, mut rb) = (stream_rng(seed, 0), stream_rng(seed, 0));
        for p in 0..8 {
            for _ in 0..5 {
                let o = obs(vec![p]);
                prop_assert_eq!(
                    egreedy_action(&a, fmap.as_ref(), &o, 0.1, &mut ra),
                    egreedy_action(&b, fmap.as_ref(), &o, 0.1, &mut rb)
                );
            }
        }
    }

    #[test]
    fn trace_stays_bounded(steps in feature_steps(), gamma in 0.0f64..0.99, lambda in 0.0f64..0.99) {
        let mut l = LinearLearner::new(12, cfg(0.1, gamma, lambda)).unwrap();
        let bound = 3.0 / (1.0 - gamma * lambda);
        for w in steps.windows(2) {
            l.update(&phi(&w[0].0), w[0].1 as f64, Some(&phi(&w[1].0))).unwrap();
            prop_assert!(l.trace().values().all(|e| e.abs() <= bound));
        }
    }

    #[test]
    fn effective_step_never_grows(steps in feature_steps()) {
        let mut l = LinearLearner::new(12, SarsaConfig::default()).unwrap();
        let mut prev = l.effective_alpha();
        for (ix, r) in &steps {
            l.update(&phi(ix), *r as f64, None).unwrap();
            prop_assert!(l.effective_alpha() <= prev);
            prev = l.effective_alpha();
        }
    }

    #[test]
    fn updates_only_touch_active_or_traced(steps in feature_steps()) {
        let mut l = LinearLearner::new(12, SarsaConfig::default()).unwrap();
        for w in steps.windows(2) {
            let before = l.weights().to_vec();
            let mut touched: std::collections::BTreeSet<usize> = l.trace().keys().copied().collect();
            touched.extend(w[0].0.iter().copied());
            l.update(&phi(&w[0].0), w[0].1 as f64, Some(&phi(&w[1].0))).unwrap();
            for (i, (x, y)) in before.iter().zip(l.weights()).enumerate() {
                if !touched.contains(&i) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}

#[test]
fn sarsa_runs_are_seed_deterministic() {
    let spec: GameSpec = "crossing:1:1".parse().unwrap();
    let run = |seed| {
        let mut agent =
            SarsaAgent::new(features_for(spec).unwrap(), SarsaConfig::default(), stream_rng(seed, 0)).unwrap();
        let mut env: Box<dyn Environment> = make_env_with_cap(spec, 400);
        let eps = run_for_frames(&mut agent, env.as_mut(), 4_000).unwrap();
        (eps, agent.learner().weights().to_vec())
    };
    assert_eq!(run(3), run(3));
}
