//! Environment transformers: sticky actions, the other stochasticity models,
//! frame skipping and reward normalization. Every wrapper is itself an
//! `Environment`.

mod noise;
mod reward;
mod skip;
mod sticky;

use serde::{Deserialize, Serialize};

use crate::env::{ActionId, EnvState, Environment, Observation, StepResult};
use crate::error::EnvError;
use crate::rng::{stream_rng, Rng};

pub use noise::{ActionNoise, HumanStarts, InitialNoops};
pub use reward::{sign_clip, RewardTransform, RewardWrapper};
pub use skip::{FrameSkip, History, LifeLoss, RandomSkip};
pub use sticky::{sticky_resolve, ExecutedActionTrace, Sticky, StickyConfig};

/// Per-layer part of an `EnvState`, innermost layer first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerState {
    Sticky { prev: usize, rng: Rng },
    FrameSkip,
    RandomSkip { rng: Rng },
    ActionNoise { rng: Rng, draws: u64, replacements: u64 },
    InitialNoops { rng: Rng, last: u32, frames: u32 },
    HumanStarts { rng: Rng, last: usize },
    Reward { scale: Option<f64>, raw_score: i64 },
    LifeLoss { lives: Option<u32>, lost: bool },
    History { frames: Vec<Vec<i32>> },
}

/// Split off this layer's part of a snapshot.
pub(crate) fn pop_layer(state: &EnvState) -> Result<(EnvState, LayerState), EnvError> {
    let mut inner = state.clone();
    let layer = inner.layers.pop().ok_or(EnvError::CorruptState)?;
    Ok((inner, layer))
}

pub(crate) fn push_layer(mut state: EnvState, layer: LayerState) -> EnvState {
    state.layers.push(layer);
    state
}

pub(crate) fn check_action(env: &dyn Environment, action: ActionId) -> Result<(), EnvError> {
    let count = env.action_count();
    if action.0 >= count {
        return Err(EnvError::InvalidAction {
            action: action.0,
            count,
        });
    }
    Ok(())
}

/// Repeat `action` for up to `frames` frames, summing rewards and stopping at
/// terminal.
pub(crate) fn repeat_action<E: Environment + ?Sized>(
    env: &mut E,
    action: ActionId,
    frames: u32,
) -> Result<StepResult, EnvError> {
    let mut acc = Accumulator::default();
    for _ in 0..frames {
        let r = env.step(action)?;
        if acc.push(r) {
            break;
        }
    }
    Ok(acc.finish())
}

/// Sums a window of inner steps into one outer step.
#[derive(Default)]
pub(crate) struct Accumulator {
    reward: f64,
    score: i64,
    frames: u32,
    last: Option<StepResult>,
}

impl Accumulator {
    /// Returns true once the window must stop.
    pub(crate) fn push(&mut self, r: StepResult) -> bool {
        self.reward += r.reward;
        self.score += r.observation.score_delta;
        self.frames += r.frames_consumed;
        let terminal = r.terminal;
        self.last = Some(r);
        terminal
    }

    pub(crate) fn finish(self) -> StepResult {
        let last = self.last.expect("window of at least one frame");
        StepResult {
            observation: Observation {
                score_delta: self.score,
                ..last.observation
            },
            reward: self.reward,
            terminal: last.terminal,
            frames_consumed: self.frames,
        }
    }
}

/// One entry of a declarative wrapper stack. Stacks are listed innermost
/// first. A `reward` entry placed before `sticky` transforms each frame before
/// the window sum; placed after, it transforms the window sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WrapperSpec {
    Sticky {
        varsigma: f64,
        #[serde(default = "default_skip")]
        frame_skip: u32,
    },
    FrameSkip {
        k: u32,
    },
    RandomSkip {
        k1: u32,
        k2: u32,
    },
    InitialNoops {
        k_max: u32,
    },
    ActionNoise {
        eps: f64,
    },
    HumanStarts {
        #[serde(default = "default_start_count")]
        count: usize,
        #[serde(default = "default_start_len")]
        max_len: u32,
    },
    Reward {
        transform: RewardTransform,
    },
    History {
        length: usize,
    },
}

fn default_skip() -> u32 {
    5
}

fn default_start_count() -> usize {
    10
}

fn default_start_len() -> u32 {
    30
}

impl WrapperSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidWrapper(m));
        match *self {
            WrapperSpec::Sticky { varsigma, frame_skip } => StickyConfig::new(varsigma, frame_skip).map(|_| ()),
            WrapperSpec::FrameSkip { k: 0 } => bad("frame_skip k must be >= 1".into()),
            WrapperSpec::RandomSkip { k1, k2 } if k1 == 0 || k1 > k2 => {
                bad(format!("random_skip needs 1 <= k1 <= k2, got {k1}..{k2}"))
            }
            WrapperSpec::ActionNoise { eps } if !(0.0..=1.0).contains(&eps) => {
                bad(format!("action_noise eps {eps} outside [0, 1]"))
            }
            WrapperSpec::HumanStarts { count, max_len } if count == 0 || max_len == 0 => {
                bad("human_starts needs count >= 1 and max_len >= 1".into())
            }
            WrapperSpec::History { length: 0 } => bad("history length must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

/// Wrap `env` with `specs`, innermost first. Layer `i` draws from stream
/// `i + 1` of `seed`.
pub fn build_stack(
    env: Box<dyn Environment>,
    specs: &[WrapperSpec],
    seed: u64,
) -> Result<Box<dyn Environment>, EnvError> {
    let mut env = env;
    for (i, spec) in specs.iter().enumerate() {
        spec.validate()?;
        let rng = stream_rng(seed, i as u64 + 1);
        env = match *spec {
            WrapperSpec::Sticky { varsigma, frame_skip } => {
                Box::new(Sticky::new(env, StickyConfig::new(varsigma, frame_skip)?, rng))
            }
            WrapperSpec::FrameSkip { k } => Box::new(FrameSkip::new(env, k)),
            WrapperSpec::RandomSkip { k1, k2 } => Box::new(RandomSkip::new(env, k1, k2, rng)?),
            WrapperSpec::InitialNoops { k_max } => Box::new(InitialNoops::new(env, k_max, rng)),
            WrapperSpec::ActionNoise { eps } => Box::new(ActionNoise::new(env, eps, rng)?),
            WrapperSpec::HumanStarts { count, max_len } => Box::new(HumanStarts::generate(env, count, max_len, rng)?),
            WrapperSpec::Reward { transform } => Box::new(RewardWrapper::new(env, transform)),
            WrapperSpec::History { length } => Box::new(History::new(env, length)?),
        };
    }
    Ok(env)
}

/// Boilerplate delegation for the read-only parts of the contract.
macro_rules! delegate_env {
    () => {
        fn flavor(&self) -> &str {
            self.inner.flavor()
        }
        fn action_count(&self) -> usize {
            self.inner.action_count()
        }
        fn max_episode_frames(&self) -> u32 {
            self.inner.max_episode_frames()
        }
        fn episode_frame(&self) -> u32 {
            self.inner.episode_frame()
        }
        fn lives(&self) -> Option<u32> {
            self.inner.lives()
        }
    };
}
pub(crate) use delegate_env;
