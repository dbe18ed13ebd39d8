//! Sarsa(λ) with sparse binary features, accumulating traces, a step size
//! normalized by the largest active-feature count seen, and trace pruning.

mod features;

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentSnapshot, EpisodeOutcome};
use crate::env::{ActionId, Environment, Observation};
use crate::error::AgentError;
use crate::rng::Rng;

pub use features::{features_for, CrossingTiles, FeatureMap, SparseFeatures, Tabular};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SarsaConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub trace_threshold: f64,
    /// Zero the trace at the start of every episode.
    pub reset_traces: bool,
}

impl Default for SarsaConfig {
    fn default() -> Self {
        SarsaConfig {
            alpha: 0.5,
            gamma: 0.99,
            lambda: 0.9,
            epsilon: 0.01,
            trace_threshold: 0.01,
            reset_traces: true,
        }
    }
}

impl SarsaConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.alpha.is_nan() || self.alpha <= 0.0 || !unit(self.gamma) || !unit(self.lambda) || !unit(self.epsilon) {
            return Err(AgentError::InvalidParameter(
                "sarsa needs alpha > 0 and gamma, lambda, epsilon in [0, 1]".into(),
            ));
        }
        if self.trace_threshold.is_nan() || self.trace_threshold < 0.0 {
            return Err(AgentError::InvalidParameter("trace_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LinearLearner {
    cfg: SarsaConfig,
    weights: Vec<f64>,
    trace: BTreeMap<usize, f64>,
    max_active_seen: usize,
}

impl LinearLearner {
    pub fn new(dim: usize, cfg: SarsaConfig) -> Result<Self, AgentError> {
        cfg.validate()?;
        Ok(LinearLearner {
            cfg,
            weights: vec![0.0; dim],
            trace: BTreeMap::new(),
            max_active_seen: 0,
        })
    }

    pub fn config(&self) -> &SarsaConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn trace(&self) -> &BTreeMap<usize, f64> {
        &self.trace
    }

    pub fn max_active_seen(&self) -> usize {
        self.max_active_seen
    }

    /// α divided by the largest active count so far; plain α before the
    /// first update.
    pub fn effective_alpha(&self) -> f64 {
        self.cfg.alpha / self.max_active_seen.max(1) as f64
    }

    pub fn value(&self, phi: &SparseFeatures) -> f64 {
        phi.indices().iter().map(|&i| self.weights[i]).sum()
    }

    pub fn reset_trace(&mut self) {
        self.trace.clear();
    }

    /// One Sarsa(λ) step. `next` is the feature vector of the next
    /// state-action actually chosen, `None` at terminal. Returns δ.
    pub fn update(
        &mut self,
        phi: &SparseFeatures,
        reward: f64,
        next: Option<&SparseFeatures>,
    ) -> Result<f64, AgentError> {
        self.max_active_seen = self.max_active_seen.max(phi.len());
        let bootstrap = next.map_or(0.0, |n| self.cfg.gamma * self.value(n));
        let delta = reward + bootstrap - self.value(phi);

        let decay = self.cfg.gamma * self.cfg.lambda;
        for e in self.trace.values_mut() {
            *e *= decay;
        }
        for &i in phi.indices() {
            *self.trace.entry(i).or_insert(0.0) += 1.0;
        }

        let step = self.effective_alpha() * delta;
        for (&i, &e) in &self.trace {
            self.weights[i] += step * e;
            if !self.weights[i].is_finite() {
                return Err(AgentError::Divergence(format!("weight {i} became {}", self.weights[i])));
            }
        }
        let threshold = self.cfg.trace_threshold;
        self.trace.retain(|_, e| e.abs() >= threshold);
        Ok(delta)
    }
}

/// ε-greedy over θᵀφ(s, a), ties broken uniformly. Draw order: one uniform
/// for the ε test, then one index into the random or tied set.
pub fn egreedy_action(
    learner: &LinearLearner,
    fmap: &dyn FeatureMap,
    obs: &Observation,
    epsilon: f64,
    rng: &mut Rng,
) -> ActionId {
    let n = fmap.action_count();
    if rng.gen::<f64>() < epsilon {
        return ActionId(rng.gen_range(0..n));
    }
    let values: Vec<f64> = (0..n)
        .map(|a| learner.value(&fmap.features(obs, ActionId(a))))
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..n).filter(|&a| values[a] == best).collect();
    ActionId(ties[rng.gen_range(0..ties.len())])
}

pub struct SarsaAgent {
    learner: LinearLearner,
    fmap: Box<dyn FeatureMap>,
    rng: Rng,
}

impl SarsaAgent {
    pub fn new(fmap: Box<dyn FeatureMap>, cfg: SarsaConfig, rng: Rng) -> Result<Self, AgentError> {
        let learner = LinearLearner::new(fmap.dim(), cfg)?;
        Ok(SarsaAgent { learner, fmap, rng })
    }

    pub fn learner(&self) -> &LinearLearner {
        &self.learner
    }

    pub fn features(&self) -> &dyn FeatureMap {
        self.fmap.as_ref()
    }

    fn choose(&mut self, obs: &Observation) -> ActionId {
        let eps = self.learner.cfg.epsilon;
        egreedy_action(&self.learner, self.fmap.as_ref(), obs, eps, &mut self.rng)
    }

    /// Greedy action with ties broken toward the lowest index.
    pub fn greedy(&self, obs: &Observation) -> ActionId {
        let values: Vec<f64> = (0..self.fmap.action_count())
            .map(|a| self.learner.value(&self.fmap.features(obs, ActionId(a))))
            .collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ActionId(values.iter().position(|&v| v == best).unwrap_or(0))
    }
}

impl Agent for SarsaAgent {
    fn run_episode(&mut self, env: &mut dyn Environment) -> Result<EpisodeOutcome, AgentError> {
        if self.learner.cfg.reset_traces {
            self.learner.reset_trace();
        }
        let obs = env.reset()?;
        let mut outcome = EpisodeOutcome {
            frames: env.reset_frames() as u64,
            ..Default::default()
        };
        let mut action = self.choose(&obs);
        let mut phi = self.fmap.features(&obs, action);
        loop {
            let r = env.step(action)?;
            outcome.record(&r);
            if r.terminal {
                self.learner.update(&phi, r.reward, None)?;
                return Ok(outcome);
            }
            let next_action = self.choose(&r.observation);
            let next_phi = self.fmap.features(&r.observation, next_action);
            self.learner.update(&phi, r.reward, Some(&next_phi))?;
            action = next_action;
            phi = next_phi;
        }
    }

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            tree: None,
            weights: Some(self.learner.weights.clone()),
        }
    }
}
