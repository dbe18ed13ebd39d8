//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::Rng as _;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use stickyrl::brute::{EpisodeTranscript, HistoryKey, ObsDigest};
use stickyrl::dqn::{QNetwork, Sample};
use stickyrl::env::{make_env_with_cap, ActionId, Environment, GameSpec};
use stickyrl::rng::stream_rng;
use stickyrl::td_linear::{features_for, LinearLearner, SarsaConfig};

/// Upper-tail p-value of Pearson's statistic against a uniform split.
pub fn chi_square_p(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

/// Three cells; RIGHT from the last pays +1 and ends, LEFT at 0 stays.
pub fn tiny_chain(s: usize, a: usize) -> (f64, Option<usize>) {
    match (s, a) {
        (2, 1) => (1.0, None),
        (s, 1) => (0.0, Some(s + 1)),
        (s, _) => (0.0, Some(s.saturating_sub(1))),
    }
}

pub fn value_iteration(gamma: f64) -> [[f64; 2]; 3] {
    let mut q = [[0.0f64; 2]; 3];
    for _ in 0..1_000 {
        let v: Vec<f64> = q.iter().map(|r| r[0].max(r[1])).collect();
        for (s, row) in q.iter_mut().enumerate() {
            for (a, x) in row.iter_mut().enumerate() {
                let (r, next) = tiny_chain(s, a);
                *x = r + next.map_or(0.0, |n| gamma * v[n]);
            }
        }
    }
    q
}

/// Drive a λ=0 linear learner and a plain Q table side by side on seeded
/// random-action episodes, asserting identical bits after every update.
/// Returns the number of updates checked.
pub fn assert_matches_tabular_sarsa(spec: GameSpec, cells: usize, seed: u64, episodes: usize) -> usize {
    let fmap = features_for(spec).unwrap();
    let actions = fmap.action_count();
    let c = SarsaConfig {
        lambda: 0.0,
        ..SarsaConfig::default()
    };
    let mut l = LinearLearner::new(fmap.dim(), c.clone()).unwrap();
    let mut table = vec![vec![0.0f64; actions]; cells];
    let mut env = make_env_with_cap(spec, 200);
    let mut rng = stream_rng(seed, 0);
    let mut checked = 0;
    for _ in 0..episodes {
        let mut o = env.reset().unwrap();
        let mut a = rng.gen_range(0..actions);
        loop {
            let s = o.payload[0] as usize;
            let r = env.step(ActionId(a)).unwrap();
            let next = (!r.terminal).then(|| (r.observation.payload[0] as usize, rng.gen_range(0..actions)));
            let next_phi = next.map(|(_, a2)| fmap.features(&r.observation, ActionId(a2)));
            l.update(&fmap.features(&o, ActionId(a)), r.reward, next_phi.as_ref())
                .unwrap();
            let boot = next.map_or(0.0, |(s2, a2)| c.gamma * table[s2][a2]);
            let delta = r.reward + boot - table[s][a];
            table[s][a] += c.alpha * delta;
            for (st, row) in table.iter().enumerate() {
                for (ac, &q) in row.iter().enumerate() {
                    assert_eq!(l.weights()[st * actions + ac].to_bits(), q.to_bits());
                }
            }
            checked += 1;
            match next {
                None => break,
                Some((_, a2)) => {
                    a = a2;
                    o = r.observation;
                }
            }
        }
    }
    checked
}

/// Exhaustive q*(h, a) over every history of a deterministic game.
pub fn exhaustive_q(env: &mut dyn Environment) -> HashMap<(HistoryKey, usize), f64> {
    fn visit(env: &mut dyn Environment, key: HistoryKey, out: &mut HashMap<(HistoryKey, usize), f64>) -> f64 {
        let saved = env.save_state();
        let mut best = f64::NEG_INFINITY;
        for a in 0..env.action_count() {
            env.restore_state(&saved).unwrap();
            let r = env.step(ActionId(a)).unwrap();
            let digest = ObsDigest::of(&r.observation, r.terminal);
            let next = key.extend(ActionId(a), digest);
            let q = r.reward + if r.terminal { 0.0 } else { visit(env, next, out) };
            out.insert((key, a), q);
            best = best.max(q);
        }
        env.restore_state(&saved).unwrap();
        best
    }
    env.reset().unwrap();
    let mut out = HashMap::new();
    visit(env, HistoryKey::ROOT, &mut out);
    out
}

/// Best raw episode score reachable within `depth` decisions, searching
/// every action sequence. Sequences still running at the depth limit count
/// with the score collected so far.
pub fn best_score(env: &mut dyn Environment, depth: u32) -> i64 {
    fn visit(env: &mut dyn Environment, depth: u32) -> i64 {
        if depth == 0 {
            return 0;
        }
        let saved = env.save_state();
        let mut best = i64::MIN;
        for a in 0..env.action_count() {
            env.restore_state(&saved).unwrap();
            let r = env.step(ActionId(a)).unwrap();
            let rest = if r.terminal { 0 } else { visit(env, depth - 1) };
            best = best.max(r.observation.score_delta + rest);
        }
        env.restore_state(&saved).unwrap();
        best
    }
    env.reset().unwrap();
    visit(env, depth)
}

/// Visit count, reward sum and successor counts of one (history, action).
type Tally = (u64, f64, Vec<(HistoryKey, u64)>);

/// Bottom-up DP over the union of transcript paths.
#[derive(Default)]
pub struct PathDp {
    tallies: HashMap<(HistoryKey, usize), Tally>,
    terminal: HashSet<HistoryKey>,
    pub actions: usize,
    pub gamma: f64,
}

impl PathDp {
    pub fn new(actions: usize, gamma: f64) -> Self {
        PathDp {
            actions,
            gamma,
            ..PathDp::default()
        }
    }

    pub fn add(&mut self, ep: &EpisodeTranscript) {
        let mut key = HistoryKey::ROOT;
        for s in &ep.steps {
            let next = key.extend(s.action, s.obs);
            let t = self.tallies.entry((key, s.action.0)).or_default();
            t.0 += 1;
            t.1 += s.reward();
            match t.2.iter_mut().find(|(k, _)| *k == next) {
                Some(e) => e.1 += 1,
                None => t.2.push((next, 1)),
            }
            key = next;
        }
        if ep.terminal {
            self.terminal.insert(key);
        }
    }

    pub fn v(&self, key: HistoryKey, memo: &mut HashMap<HistoryKey, f64>) -> f64 {
        if self.terminal.contains(&key) {
            return 0.0;
        }
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let v = (0..self.actions)
            .map(|a| self.q(key, a, memo))
            .fold(f64::NEG_INFINITY, f64::max);
        memo.insert(key, v);
        v
    }

    pub fn q(&self, key: HistoryKey, a: usize, memo: &mut HashMap<HistoryKey, f64>) -> f64 {
        let Some((n, sum, succ)) = self.tallies.get(&(key, a)) else {
            return f64::NEG_INFINITY;
        };
        let n = *n as f64;
        let mut q = sum / n;
        for &(k, c) in succ {
            let v = self.v(k, memo);
            if v == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            q += self.gamma * (c as f64 / n) * v;
        }
        q
    }
}

/// Max relative gap between analytic and central-difference gradients.
pub fn gradient_gap(net: &QNetwork, batch: &[Sample<'_>]) -> f64 {
    let analytic = net.gradient(batch);
    let h = 1e-5;
    let mut probe = net.clone();
    analytic
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let p = probe.params()[i];
            probe.params_mut()[i] = p + h;
            let up = probe.loss(batch);
            probe.params_mut()[i] = p - h;
            let down = probe.loss(batch);
            probe.params_mut()[i] = p;
            let numeric = (up - down) / (2.0 * h);
            (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6)
        })
        .fold(0.0, f64::max)
}

/// Worst gradient gap over `n` random (net, batch) pairs.
pub fn worst_gradient_gap(seed: u64, n: usize) -> f64 {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|_| {
            let (i, h, o) = (rng.gen_range(1..5), rng.gen_range(1..7), rng.gen_range(1..5));
            let net = QNetwork::init(i, h, o, &mut rng);
            let xs: Vec<Vec<f64>> = (0..rng.gen_range(1..6))
                .map(|_| (0..i).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let batch: Vec<Sample<'_>> = xs
                .iter()
                .map(|x| Sample {
                    x,
                    action: rng.gen_range(0..o),
                    target: rng.gen_range(-2.0..2.0),
                })
                .collect();
            gradient_gap(&net, &batch)
        })
        .fold(0.0, f64::max)
}

/// Trailing mean computed the slow way.
pub fn window_oracle(eps: &[(i64, u64)], milestone: u64, k: usize) -> f64 {
    let mut cum = 0;
    for (i, &(_, f)) in eps.iter().enumerate() {
        cum += f;
        if cum >= milestone {
            let lo = (i + 1).saturating_sub(k);
            let w: Vec<f64> = eps[lo..=i].iter().map(|e| e.0 as f64).collect();
            return w.iter().sum::<f64>() / w.len() as f64;
        }
    }
    panic!("not reached");
}
