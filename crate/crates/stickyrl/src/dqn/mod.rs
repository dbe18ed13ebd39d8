//! A small neural Q-learner: one tanh hidden layer, experience replay, a
//! periodically synchronized target network, sign-clipped rewards and a
//! linearly annealed ε. Gradients are computed by hand.

mod net;
mod replay;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentSnapshot, EpisodeOutcome};
use crate::env::{ActionId, Environment, Observation};
use crate::error::AgentError;
use crate::rng::Rng;
use crate::wrappers::sign_clip;

pub use net::{QNetwork, Sample};
pub use replay::{ReplayBuffer, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Rmsprop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: usize,
    pub optimizer: OptimizerKind,
    /// Defaults to 0.03 for SGD and 0.00025 for RMSProp.
    pub alpha: Option<f64>,
    pub gamma: f64,
    pub replay_capacity: usize,
    /// Decisions of uniformly random play before learning starts.
    pub warmup: u64,
    pub batch_size: usize,
    /// Decisions between minibatch updates.
    pub update_every: u64,
    /// Decisions between target-network syncs.
    pub target_sync: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub anneal_frames: u64,
    /// Payload entries are multiplied by this before entering the network.
    pub input_scale: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: 32,
            optimizer: OptimizerKind::Sgd,
            alpha: None,
            gamma: 0.99,
            replay_capacity: 10_000,
            warmup: 1_000,
            batch_size: 32,
            update_every: 4,
            target_sync: 1_000,
            eps_start: 1.0,
            eps_end: 0.01,
            anneal_frames: 10_000,
            input_scale: 1.0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let ok = self.hidden > 0
            && self.replay_capacity > 0
            && self.batch_size > 0
            && self.update_every > 0
            && self.target_sync > 0
            && unit(self.gamma)
            && unit(self.eps_start)
            && unit(self.eps_end)
            && self.alpha.is_none_or(|a| a > 0.0)
            && self.input_scale.is_finite();
        if !ok {
            return Err(AgentError::InvalidParameter(
                "dqn_mini hyperparameters out of range".into(),
            ));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> Optimizer {
        match self.optimizer {
            OptimizerKind::Sgd => Optimizer::sgd(self.alpha.unwrap_or(0.03)),
            OptimizerKind::Rmsprop => Optimizer::rmsprop(self.alpha.unwrap_or(0.00025)),
        }
    }

    pub fn schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            eps_start: self.eps_start,
            eps_end: self.eps_end,
            anneal_frames: self.anneal_frames,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    pub anneal_frames: u64,
}

impl AnnealSchedule {
    pub fn epsilon(&self, frame: u64) -> f64 {
        if frame >= self.anneal_frames {
            return self.eps_end;
        }
        let t = frame as f64 / self.anneal_frames as f64;
        self.eps_start + (self.eps_end - self.eps_start) * t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Optimizer {
    Sgd {
        alpha: f64,
    },
    RmsProp {
        alpha: f64,
        decay: f64,
        floor: f64,
        mean_sq: Vec<f64>,
    },
}

impl Optimizer {
    pub fn sgd(alpha: f64) -> Self {
        Optimizer::Sgd { alpha }
    }

    pub fn rmsprop(alpha: f64) -> Self {
        Optimizer::RmsProp {
            alpha,
            decay: 0.95,
            floor: 0.01,
            mean_sq: Vec::new(),
        }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd { alpha } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= *alpha * g;
                }
            }
            Optimizer::RmsProp {
                alpha,
                decay,
                floor,
                mean_sq,
            } => {
                if mean_sq.len() != params.len() {
                    *mean_sq = vec![0.0; params.len()];
                }
                for ((p, g), m) in params.iter_mut().zip(grad).zip(mean_sq.iter_mut()) {
                    *m = *decay * *m + (1.0 - *decay) * g * g;
                    *p -= *alpha * g / (*m + *floor).sqrt();
                }
            }
        }
    }
}

/// Bootstrap target from the frozen network; terminal transitions use 0.
pub fn td_target(target: &QNetwork, t: &Transition, gamma: f64) -> f64 {
    if t.terminal {
        return t.reward;
    }
    let next = target.forward(&t.next_obs);
    t.reward + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One minibatch step on ½(y − q(s,a))² averaged over `batch`, with `target`
/// held fixed.
pub fn dqn_update(
    online: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
    opt: &mut Optimizer,
) -> Result<(), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::InvalidParameter("empty minibatch".into()));
    }
    let targets: Vec<f64> = batch.iter().map(|t| td_target(target, t, gamma)).collect();
    let samples: Vec<Sample<'_>> = batch
        .iter()
        .zip(&targets)
        .map(|(t, &y)| Sample {
            x: &t.obs,
            action: t.action,
            target: y,
        })
        .collect();
    let grad = online.gradient(&samples);
    opt.apply(online.params_mut(), &grad);
    if let Some(i) = online.params().iter().position(|p| !p.is_finite()) {
        return Err(AgentError::Divergence(format!("network parameter {i} is not finite")));
    }
    Ok(())
}

pub fn sync_target(online: &QNetwork, target: &mut QNetwork) {
    target.copy_from(online);
}

/// Counters for protocol assertions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DqnCounters {
    pub decisions: u64,
    pub frames: u64,
    pub updates: u64,
    pub syncs: u64,
}

pub struct DqnAgent {
    cfg: DqnConfig,
    online: QNetwork,
    target: QNetwork,
    replay: ReplayBuffer,
    opt: Optimizer,
    rng: Rng,
    counters: DqnCounters,
}

impl DqnAgent {
    pub fn new(obs_len: usize, actions: usize, cfg: DqnConfig, mut rng: Rng) -> Result<Self, AgentError> {
        cfg.validate()?;
        let online = QNetwork::init(obs_len, cfg.hidden, actions, &mut rng);
        let target = online.clone();
        Ok(DqnAgent {
            replay: ReplayBuffer::new(cfg.replay_capacity),
            opt: cfg.optimizer(),
            cfg,
            online,
            target,
            rng,
            counters: DqnCounters::default(),
        })
    }

    pub fn online(&self) -> &QNetwork {
        &self.online
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn counters(&self) -> DqnCounters {
        self.counters
    }

    pub fn encode(&self, obs: &Observation) -> Vec<f64> {
        obs.payload.iter().map(|&v| v as f64 * self.cfg.input_scale).collect()
    }

    /// Lowest-index argmax of the online network.
    pub fn greedy(&self, obs: &Observation) -> ActionId {
        let q = self.online.forward(&self.encode(obs));
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ActionId(q.iter().position(|&v| v == best).unwrap_or(0))
    }

    fn choose(&mut self, x: &[f64]) -> ActionId {
        let n = self.online.output_dim();
        let eps = if self.counters.decisions < self.cfg.warmup {
            1.0
        } else {
            self.cfg.schedule().epsilon(self.counters.frames)
        };
        if self.rng.gen::<f64>() < eps {
            return ActionId(self.rng.gen_range(0..n));
        }
        let q = self.online.forward(x);
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..n).filter(|&a| q[a] == best).collect();
        ActionId(ties[self.rng.gen_range(0..ties.len())])
    }

    fn learn(&mut self) -> Result<(), AgentError> {
        let c = &self.counters;
        if c.decisions >= self.cfg.warmup
            && c.decisions.is_multiple_of(self.cfg.update_every)
            && !self.replay.is_empty()
        {
            let idx = self.replay.sample_indices(self.cfg.batch_size, &mut self.rng);
            let batch: Vec<&Transition> = idx.iter().map(|&i| self.replay.get(i)).collect();
            dqn_update(&mut self.online, &self.target, &batch, self.cfg.gamma, &mut self.opt)?;
            self.counters.updates += 1;
        }
        if self.counters.decisions.is_multiple_of(self.cfg.target_sync) {
            sync_target(&self.online, &mut self.target);
            self.counters.syncs += 1;
        }
        Ok(())
    }
}

impl Agent for DqnAgent {
    fn run_episode(&mut self, env: &mut dyn Environment) -> Result<EpisodeOutcome, AgentError> {
        let obs = env.reset()?;
        let mut outcome = EpisodeOutcome {
            frames: env.reset_frames() as u64,
            ..Default::default()
        };
        self.counters.frames += outcome.frames;
        let mut x = self.encode(&obs);
        loop {
            let action = self.choose(&x);
            let r = env.step(action)?;
            outcome.record(&r);
            self.counters.decisions += 1;
            self.counters.frames += r.frames_consumed as u64;
            let next = self.encode(&r.observation);
            self.replay.push(Transition {
                obs: x,
                action: action.0,
                reward: sign_clip(r.reward),
                next_obs: next.clone(),
                terminal: r.terminal,
            });
            self.learn()?;
            if r.terminal {
                return Ok(outcome);
            }
            x = next;
        }
    }

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot {
            tree: None,
            weights: Some(self.online.params().to_vec()),
        }
    }
}
