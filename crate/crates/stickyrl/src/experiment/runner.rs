use rayon::prelude::*;

use crate::agent::{Agent, AgentSnapshot};
use crate::brute::BruteAgent;
use crate::dqn::DqnAgent;
use crate::env::{make_env_with_cap, Environment, GameSpec};
use crate::error::AgentError;
use crate::eval::TrialRecord;
use crate::rng::stream_rng;
use crate::td_linear::{features_for, SarsaAgent};
use crate::wrappers::{build_stack, LifeLoss, WrapperSpec};

use super::config::{AgentSpec, ExperimentConfig};
use super::seed::trial_seed;

/// Everything needed to run one trial in isolation.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub setting: String,
    pub agent: AgentSpec,
    pub game: GameSpec,
    pub wrappers: Vec<WrapperSpec>,
    pub trial: u32,
    pub seed: u64,
    pub frame_budget: u64,
    pub milestones: Vec<u64>,
    pub max_episode_frames: u32,
    pub terminate_on_life_loss: bool,
}

#[derive(Clone, Debug)]
pub struct TrialOutput {
    pub setting: String,
    pub record: TrialRecord,
    /// Learner state captured at each milestone boundary.
    pub snapshots: Vec<(u64, AgentSnapshot)>,
}

impl TrialOutput {
    pub fn sort_key(&self) -> (String, String, String, u32) {
        (
            self.setting.clone(),
            self.record.agent.clone(),
            self.record.game.clone(),
            self.record.trial,
        )
    }
}

pub fn build_env(spec: &TrialSpec) -> Result<Box<dyn Environment>, AgentError> {
    let mut env = make_env_with_cap(spec.game, spec.max_episode_frames);
    if spec.terminate_on_life_loss {
        env = Box::new(LifeLoss::new(env));
    }
    Ok(build_stack(env, &spec.wrappers, spec.seed)?)
}

/// Agent for `spec`, drawing from stream 0 of the trial seed.
pub fn build_agent(
    agent: &AgentSpec,
    game: GameSpec,
    env: &dyn Environment,
    seed: u64,
) -> Result<Box<dyn Agent>, AgentError> {
    let rng = stream_rng(seed, 0);
    Ok(match agent {
        AgentSpec::Brute { params, .. } => Box::new(BruteAgent::new(env.action_count(), params.clone(), rng)?),
        AgentSpec::SarsaLambda { params, .. } => Box::new(SarsaAgent::new(features_for(game)?, params.clone(), rng)?),
        AgentSpec::DqnMini { params, .. } => Box::new(DqnAgent::new(
            env.observation_len(),
            env.action_count(),
            params.clone(),
            rng,
        )?),
    })
}

/// Train until the budget is spent, finishing the last episode. Errors are
/// recorded in `record.failure` with the episodes so far kept.
pub fn run_trial(spec: &TrialSpec) -> TrialOutput {
    let mut record = TrialRecord::new(spec.agent.name(), spec.game.to_string(), spec.trial, spec.seed);
    let mut snapshots = Vec::new();
    let result = (|| -> Result<(), AgentError> {
        let mut env = build_env(spec)?;
        let mut agent = build_agent(&spec.agent, spec.game, env.as_ref(), spec.seed)?;
        let mut pending = spec.milestones.iter().copied().peekable();
        while record.total_frames() < spec.frame_budget {
            let ep = agent.run_episode(env.as_mut())?;
            record.push(ep);
            let done = record.total_frames();
            let mut snap = None;
            while let Some(m) = pending.next_if(|&m| m <= done) {
                let s = snap.get_or_insert_with(|| agent.snapshot());
                snapshots.push((m, s.clone()));
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        record.failure = Some(e.to_string());
    }
    TrialOutput {
        setting: spec.setting.clone(),
        record,
        snapshots,
    }
}

/// Every (setting, agent, game, trial) cell of the config.
pub fn plan(cfg: &ExperimentConfig) -> Vec<TrialSpec> {
    let milestones = cfg.milestones();
    let mut out = Vec::new();
    for (setting, wrappers) in cfg.stochasticity.settings() {
        for agent in &cfg.agents {
            for game in &cfg.games {
                for trial in 0..cfg.trials_per_cell {
                    out.push(TrialSpec {
                        setting: setting.clone(),
                        agent: agent.clone(),
                        game: *game,
                        wrappers: wrappers.clone(),
                        trial,
                        seed: trial_seed(cfg.base_seed, agent.name(), &game.to_string(), trial),
                        frame_budget: cfg.frame_budget,
                        milestones: milestones.clone(),
                        max_episode_frames: cfg.max_episode_frames,
                        terminate_on_life_loss: cfg.terminate_on_life_loss,
                    });
                }
            }
        }
    }
    out
}

/// Run all trials on `jobs` worker threads and return them sorted by
/// (setting, agent, game, trial).
pub fn run_all(specs: &[TrialSpec], jobs: usize) -> Vec<TrialOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let mut outputs: Vec<TrialOutput> = pool.install(|| specs.par_iter().map(run_trial).collect());
    outputs.sort_by_key(|o| o.sort_key());
    outputs
}
