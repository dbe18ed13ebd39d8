//! The Brute: a partial history tree with maximum-likelihood node models,
//! lower-bound action values propagated backward after every episode, and
//! visit-decayed ε-greedy exploration.

mod key;

use std::collections::HashMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentSnapshot, EpisodeOutcome};
use crate::env::{ActionId, Environment, Observation};
use crate::error::AgentError;
use crate::rng::Rng;

pub use key::{HistoryKey, ObsDigest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BruteConfig {
    pub gamma: f64,
    /// ε(h) = min(eps_numerator / ln(n(h) + eps_offset), 1).
    pub eps_numerator: f64,
    pub eps_offset: f64,
    /// Keep full histories and observations to detect digest collisions.
    pub debug_collisions: bool,
}

impl Default for BruteConfig {
    fn default() -> Self {
        BruteConfig {
            gamma: 1.0,
            eps_numerator: 0.005,
            eps_offset: 2.0,
            debug_collisions: false,
        }
    }
}

impl BruteConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(AgentError::InvalidParameter(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if self.eps_numerator.is_nan()
            || self.eps_numerator < 0.0
            || !self.eps_offset.is_finite()
            || self.eps_offset < 1.0
        {
            return Err(AgentError::InvalidParameter(
                "eps_numerator must be >= 0 and eps_offset >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn epsilon(&self, visits: u64) -> f64 {
        let denom = (visits as f64 + self.eps_offset).ln();
        if denom <= 0.0 {
            return 1.0;
        }
        (self.eps_numerator / denom).min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionRecord {
    pub count: u64,
    pub reward_sum: f64,
    /// (observation digest, child key, count), in order of first sighting.
    pub successors: Vec<(ObsDigest, HistoryKey, u64)>,
    pub q: f64,
}

impl Default for ActionRecord {
    fn default() -> Self {
        ActionRecord {
            count: 0,
            reward_sum: 0.0,
            successors: Vec::new(),
            q: f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryNode {
    pub visits: u64,
    pub depth: u32,
    pub terminal: bool,
    pub actions: Vec<ActionRecord>,
}

impl HistoryNode {
    fn new(depth: u32, actions: usize) -> Self {
        HistoryNode {
            visits: 0,
            depth,
            terminal: false,
            actions: vec![ActionRecord::default(); actions],
        }
    }

    pub fn best_value(&self) -> f64 {
        self.actions.iter().map(|r| r.q).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub action: ActionId,
    pub obs: ObsDigest,
    pub reward_bits: u64,
}

impl TranscriptStep {
    pub fn new(action: ActionId, obs: ObsDigest, reward: f64) -> Self {
        TranscriptStep {
            action,
            obs,
            reward_bits: reward.to_bits(),
        }
    }

    pub fn reward(&self) -> f64 {
        f64::from_bits(self.reward_bits)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTranscript {
    pub steps: Vec<TranscriptStep>,
    pub terminal: bool,
}

impl EpisodeTranscript {
    /// History keys from the root through the final node.
    pub fn keys(&self) -> Vec<HistoryKey> {
        let mut keys = Vec::with_capacity(self.steps.len() + 1);
        let mut k = HistoryKey::ROOT;
        keys.push(k);
        for s in &self.steps {
            k = k.extend(s.action, s.obs);
            keys.push(k);
        }
        keys
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub node_count: usize,
    pub max_depth: u32,
    pub total_visits: u64,
}

#[derive(Clone, Debug)]
pub struct HistoryTree {
    cfg: BruteConfig,
    action_count: usize,
    nodes: HashMap<HistoryKey, HistoryNode>,
    max_depth: u32,
    total_visits: u64,
}

impl HistoryTree {
    pub fn new(action_count: usize, cfg: BruteConfig) -> Self {
        HistoryTree {
            cfg,
            action_count,
            nodes: HashMap::new(),
            max_depth: 0,
            total_visits: 0,
        }
    }

    pub fn config(&self) -> &BruteConfig {
        &self.cfg
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn node(&self, key: HistoryKey) -> Option<&HistoryNode> {
        self.nodes.get(&key)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&HistoryKey, &HistoryNode)> {
        self.nodes.iter()
    }

    pub fn stats(&self) -> TreeStats {
        TreeStats {
            node_count: self.nodes.len(),
            max_depth: self.max_depth,
            total_visits: self.total_visits,
        }
    }

    pub fn visits(&self, key: HistoryKey) -> u64 {
        self.nodes.get(&key).map_or(0, |n| n.visits)
    }

    pub fn epsilon(&self, key: HistoryKey) -> f64 {
        self.cfg.epsilon(self.visits(key))
    }

    /// Stored lower bound, or -inf for anything unseen.
    pub fn value(&self, key: HistoryKey, action: ActionId) -> Result<f64, AgentError> {
        if action.0 >= self.action_count {
            return Err(AgentError::InvalidAction {
                action: action.0,
                count: self.action_count,
            });
        }
        Ok(self
            .nodes
            .get(&key)
            .map_or(f64::NEG_INFINITY, |n| n.actions[action.0].q))
    }

    /// Greedy choices at `key` (all actions when the node is unseen).
    pub fn greedy_actions(&self, key: HistoryKey) -> Vec<ActionId> {
        let Some(node) = self.nodes.get(&key) else {
            return (0..self.action_count).map(ActionId).collect();
        };
        let best = node.best_value();
        node.actions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.q == best)
            .map(|(a, _)| ActionId(a))
            .collect()
    }

    pub fn select_action(&self, key: HistoryKey, rng: &mut Rng) -> ActionId {
        if rng.gen::<f64>() < self.epsilon(key) {
            return ActionId(rng.gen_range(0..self.action_count));
        }
        let ties = self.greedy_actions(key);
        ties[rng.gen_range(0..ties.len())]
    }

    fn node_value(&self, key: HistoryKey) -> f64 {
        match self.nodes.get(&key) {
            Some(n) if n.terminal => 0.0,
            Some(n) => n.best_value(),
            None => f64::NEG_INFINITY,
        }
    }

    /// Recompute q̂(h, a) from the current MLE model.
    fn backup(&self, key: HistoryKey, action: ActionId) -> f64 {
        let rec = &self.nodes[&key].actions[action.0];
        if rec.count == 0 {
            return f64::NEG_INFINITY;
        }
        let n = rec.count as f64;
        let mut q = rec.reward_sum / n;
        for &(_, child, c) in &rec.successors {
            let v = self.node_value(child);
            if v == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            q += self.cfg.gamma * (c as f64 / n) * v;
        }
        q
    }

    /// Fold one episode into the tallies, then refresh q̂ backward along its
    /// path. Nothing off the path is touched.
    pub fn update(&mut self, episode: &EpisodeTranscript) -> Result<(), AgentError> {
        if episode.steps.is_empty() {
            return Err(AgentError::TranscriptMismatch("empty transcript".into()));
        }
        if let Some(s) = episode.steps.iter().find(|s| s.action.0 >= self.action_count) {
            return Err(AgentError::InvalidAction {
                action: s.action.0,
                count: self.action_count,
            });
        }
        let actions = self.action_count;
        let mut path = Vec::with_capacity(episode.steps.len());
        let mut key = HistoryKey::ROOT;
        for (depth, step) in episode.steps.iter().enumerate() {
            let child = key.extend(step.action, step.obs);
            let node = self
                .nodes
                .entry(key)
                .or_insert_with(|| HistoryNode::new(depth as u32, actions));
            if node.terminal {
                return Err(AgentError::TranscriptMismatch(format!(
                    "episode continues past a terminal history at depth {depth}"
                )));
            }
            node.visits += 1;
            let rec = &mut node.actions[step.action.0];
            rec.count += 1;
            rec.reward_sum += step.reward();
            match rec.successors.iter_mut().find(|(d, _, _)| *d == step.obs) {
                Some(entry) => entry.2 += 1,
                None => rec.successors.push((step.obs, child, 1)),
            }
            path.push((key, step.action));
            key = child;
        }
        let depth = episode.steps.len() as u32;
        let leaf = self
            .nodes
            .entry(key)
            .or_insert_with(|| HistoryNode::new(depth, actions));
        leaf.visits += 1;
        if episode.terminal {
            leaf.terminal = true;
        }
        self.total_visits += episode.steps.len() as u64 + 1;
        self.max_depth = self.max_depth.max(depth);

        for &(key, action) in path.iter().rev() {
            let q = self.backup(key, action);
            if let Some(node) = self.nodes.get_mut(&key) {
                node.actions[action.0].q = q;
            }
        }
        Ok(())
    }
}

/// Full record of histories and observation payloads, for collision checks.
#[derive(Clone, Debug, Default)]
struct CollisionLog {
    histories: HashMap<HistoryKey, Vec<(usize, ObsDigest)>>,
    observations: HashMap<ObsDigest, (Observation, bool)>,
}

impl CollisionLog {
    fn check(
        &mut self,
        history: &[(usize, ObsDigest)],
        key: HistoryKey,
        obs: &Observation,
        terminal: bool,
    ) -> Result<(), AgentError> {
        let depth = history.len();
        match self.observations.get(&history[depth - 1].1) {
            Some((o, t)) if o != obs || *t != terminal => return Err(AgentError::Collision { depth }),
            Some(_) => {}
            None => {
                self.observations.insert(history[depth - 1].1, (obs.clone(), terminal));
            }
        }
        match self.histories.get(&key) {
            Some(h) if h.as_slice() != history => Err(AgentError::Collision { depth }),
            Some(_) => Ok(()),
            None => {
                self.histories.insert(key, history.to_vec());
                Ok(())
            }
        }
    }
}

pub struct BruteAgent {
    tree: HistoryTree,
    rng: Rng,
    last: EpisodeTranscript,
    collisions: Option<CollisionLog>,
}

impl BruteAgent {
    pub fn new(action_count: usize, cfg: BruteConfig, rng: Rng) -> Result<Self, AgentError> {
        cfg.validate()?;
        let collisions = cfg.debug_collisions.then(CollisionLog::default);
        Ok(BruteAgent {
            tree: HistoryTree::new(action_count, cfg),
            rng,
            last: EpisodeTranscript::default(),
            collisions,
        })
    }

    pub fn tree(&self) -> &HistoryTree {
        &self.tree
    }

    pub fn last_transcript(&self) -> &EpisodeTranscript {
        &self.last
    }

    /// Play episodes until `frame_budget` frames have been used, finishing
    /// the episode in progress. Returns every transcript.
    pub fn episode_loop(
        &mut self,
        env: &mut dyn Environment,
        frame_budget: u64,
    ) -> Result<Vec<EpisodeTranscript>, AgentError> {
        let mut used = 0;
        let mut out = Vec::new();
        loop {
            let outcome = self.run_episode(env)?;
            used += outcome.frames;
            out.push(self.last.clone());
            if used >= frame_budget {
                return Ok(out);
            }
        }
    }
}

impl Agent for BruteAgent {
    fn run_episode(&mut self, env: &mut dyn Environment) -> Result<EpisodeOutcome, AgentError> {
        env.reset()?;
        let mut outcome = EpisodeOutcome {
            frames: env.reset_frames() as u64,
            ..Default::default()
        };
        let mut transcript = EpisodeTranscript::default();
        let mut history = Vec::new();
        let mut key = HistoryKey::ROOT;
        loop {
            let action = self.tree.select_action(key, &mut self.rng);
            let r = env.step(action)?;
            let digest = ObsDigest::of(&r.observation, r.terminal);
            key = key.extend(action, digest);
            if let Some(log) = self.collisions.as_mut() {
                history.push((action.0, digest));
                log.check(&history, key, &r.observation, r.terminal)?;
            }
            transcript.steps.push(TranscriptStep::new(action, digest, r.reward));
            outcome.record(&r);
            if r.terminal {
                transcript.terminal = true;
                break;
            }
        }
        self.tree.update(&transcript)?;
        self.last = transcript;
        Ok(outcome)
    }

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            tree: Some(self.tree.stats()),
            weights: None,
        }
    }
}
