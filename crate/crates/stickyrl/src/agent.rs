//! What the trial runner needs from an agent.

use serde::{Deserialize, Serialize};

use crate::brute::TreeStats;
use crate::env::{Environment, StepResult};
use crate::error::AgentError;

/// Raw score and frame accounting for one finished episode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub score: i64,
    pub decisions: u32,
    pub frames: u64,
}

impl EpisodeOutcome {
    pub fn record(&mut self, r: &StepResult) {
        self.score += r.observation.score_delta;
        self.decisions += 1;
        self.frames += r.frames_consumed as u64;
    }
}

/// Learner state exported at milestones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AgentSnapshot {
    pub tree: Option<TreeStats>,
    pub weights: Option<Vec<f64>>,
}

pub trait Agent: Send {
    /// Reset `env`, play one full episode and learn from it.
    fn run_episode(&mut self, env: &mut dyn Environment) -> Result<EpisodeOutcome, AgentError>;

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot::default()
    }
}

/// Run episodes until `frame_budget` frames are used. The episode in
/// progress when the budget runs out is completed.
pub fn run_for_frames(
    agent: &mut dyn Agent,
    env: &mut dyn Environment,
    frame_budget: u64,
) -> Result<Vec<EpisodeOutcome>, AgentError> {
    let mut used = 0;
    let mut out = Vec::new();
    while used < frame_budget {
        let ep = agent.run_episode(env)?;
        used += ep.frames;
        out.push(ep);
    }
    Ok(out)
}
