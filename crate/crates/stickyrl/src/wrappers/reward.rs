use serde::{Deserialize, Serialize};

use super::{delegate_env, pop_layer, push_layer, LayerState};
use crate::env::{ActionId, EnvState, Environment, Observation, StepResult};
use crate::error::EnvError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTransform {
    Identity,
    SignClip,
    /// Divide by the magnitude of the first non-zero reward seen.
    FirstNonzeroScale,
}

pub fn sign_clip(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Applies a `RewardTransform` to the agent-facing reward. The raw episode
/// score stays available through `raw_episode_score`.
pub struct RewardWrapper<E = Box<dyn Environment>> {
    inner: E,
    transform: RewardTransform,
    scale: Option<f64>,
    raw_score: i64,
}

impl<E: Environment> RewardWrapper<E> {
    pub fn new(inner: E, transform: RewardTransform) -> Self {
        RewardWrapper {
            inner,
            transform,
            scale: None,
            raw_score: 0,
        }
    }

    pub fn learned_scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn raw_episode_score(&self) -> i64 {
        self.raw_score
    }

    pub fn apply(&mut self, r: f64) -> f64 {
        match self.transform {
            RewardTransform::Identity => r,
            RewardTransform::SignClip => sign_clip(r),
            RewardTransform::FirstNonzeroScale => {
                if self.scale.is_none() && r != 0.0 {
                    self.scale = Some(r.abs());
                }
                self.scale.map_or(r, |s| r / s)
            }
        }
    }
}

impl<E: Environment> Environment for RewardWrapper<E> {
    delegate_env!();

    fn observation_len(&self) -> usize {
        self.inner.observation_len()
    }
    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }
    fn reset_frames(&self) -> u32 {
        self.inner.reset_frames()
    }
    fn reset(&mut self) -> Result<Observation, EnvError> {
        self.raw_score = 0;
        self.inner.reset()
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        let mut r = self.inner.step(action)?;
        self.raw_score += r.observation.score_delta;
        r.reward = self.apply(r.reward);
        Ok(r)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::Reward {
                scale: self.scale,
                raw_score: self.raw_score,
            },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::Reward { scale, raw_score } = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.scale = scale;
        self.raw_score = raw_score;
        Ok(())
    }
}
