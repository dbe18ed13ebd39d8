use rand::Rng as _;

use super::{check_action, delegate_env, pop_layer, push_layer, repeat_action, LayerState};
use crate::env::{ActionId, EnvState, Environment, Observation, StepResult};
use crate::error::EnvError;
use crate::rng::Rng;

/// Repeat each action for a fixed number of frames.
pub struct FrameSkip<E = Box<dyn Environment>> {
    inner: E,
    k: u32,
}

impl<E: Environment> FrameSkip<E> {
    pub fn new(inner: E, k: u32) -> Self {
        FrameSkip { inner, k: k.max(1) }
    }
}

impl<E: Environment> Environment for FrameSkip<E> {
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
        self.inner.reset()
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        check_action(&self.inner, action)?;
        repeat_action(&mut self.inner, action, self.k)
    }
    fn save_state(&self) -> EnvState {
        push_layer(self.inner.save_state(), LayerState::FrameSkip)
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::FrameSkip = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)
    }
}

/// Each step lasts a uniformly drawn number of frames in `k1..=k2`.
pub struct RandomSkip<E = Box<dyn Environment>> {
    inner: E,
    k1: u32,
    k2: u32,
    rng: Rng,
    last_k: u32,
}

impl<E: Environment> RandomSkip<E> {
    pub fn new(inner: E, k1: u32, k2: u32, rng: Rng) -> Result<Self, EnvError> {
        if k1 == 0 || k1 > k2 {
            return Err(EnvError::InvalidWrapper(format!(
                "random_skip needs 1 <= k1 <= k2, got {k1}..{k2}"
            )));
        }
        Ok(RandomSkip {
            inner,
            k1,
            k2,
            rng,
            last_k: 0,
        })
    }

    /// Window length drawn for the last step.
    pub fn last_k(&self) -> u32 {
        self.last_k
    }
}

impl<E: Environment> Environment for RandomSkip<E> {
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
        self.inner.reset()
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        check_action(&self.inner, action)?;
        if self.inner.is_terminal() {
            return Err(EnvError::StepAfterTerminal);
        }
        self.last_k = self.rng.gen_range(self.k1..=self.k2);
        repeat_action(&mut self.inner, action, self.last_k)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::RandomSkip { rng: self.rng.clone() },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::RandomSkip { rng } = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.rng = rng;
        Ok(())
    }
}

/// Reports terminal as soon as a life is lost. The following reset is a full
/// game reset.
pub struct LifeLoss<E = Box<dyn Environment>> {
    inner: E,
    lives: Option<u32>,
    lost: bool,
}

impl<E: Environment> LifeLoss<E> {
    pub fn new(inner: E) -> Self {
        let lives = inner.lives();
        LifeLoss {
            inner,
            lives,
            lost: false,
        }
    }
}

impl<E: Environment> Environment for LifeLoss<E> {
    delegate_env!();

    fn observation_len(&self) -> usize {
        self.inner.observation_len()
    }
    fn is_terminal(&self) -> bool {
        self.lost || self.inner.is_terminal()
    }
    fn reset_frames(&self) -> u32 {
        self.inner.reset_frames()
    }
    fn reset(&mut self) -> Result<Observation, EnvError> {
        let obs = self.inner.reset()?;
        self.lives = obs.lives;
        self.lost = false;
        Ok(obs)
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        if self.lost {
            return Err(EnvError::StepAfterTerminal);
        }
        let mut r = self.inner.step(action)?;
        if let (Some(before), Some(now)) = (self.lives, r.observation.lives) {
            if now < before {
                self.lost = true;
                r.terminal = true;
            }
        }
        self.lives = r.observation.lives;
        Ok(r)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::LifeLoss {
                lives: self.lives,
                lost: self.lost,
            },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::LifeLoss { lives, lost } = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.lives = lives;
        self.lost = lost;
        Ok(())
    }
}

/// Concatenates the last `length` payloads, oldest first. The start of an
/// episode is padded with copies of the first observation.
pub struct History<E = Box<dyn Environment>> {
    inner: E,
    length: usize,
    frames: Vec<Vec<i32>>,
}

impl<E: Environment> History<E> {
    pub fn new(inner: E, length: usize) -> Result<Self, EnvError> {
        if length == 0 {
            return Err(EnvError::InvalidWrapper("history length must be >= 1".into()));
        }
        Ok(History {
            inner,
            length,
            frames: Vec::new(),
        })
    }

    fn stacked(&self, mut obs: Observation) -> Observation {
        obs.payload = self.frames.concat();
        obs
    }
}

impl<E: Environment> Environment for History<E> {
    delegate_env!();

    fn observation_len(&self) -> usize {
        self.inner.observation_len() * self.length
    }
    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }
    fn reset_frames(&self) -> u32 {
        self.inner.reset_frames()
    }
    fn reset(&mut self) -> Result<Observation, EnvError> {
        let obs = self.inner.reset()?;
        self.frames = vec![obs.payload.clone(); self.length];
        Ok(self.stacked(obs))
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        let mut r = self.inner.step(action)?;
        self.frames.remove(0);
        self.frames.push(r.observation.payload.clone());
        r.observation = self.stacked(r.observation);
        Ok(r)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::History {
                frames: self.frames.clone(),
            },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::History { frames } = layer else {
            return Err(EnvError::CorruptState);
        };
        if frames.len() != self.length {
            return Err(EnvError::CorruptState);
        }
        self.inner.restore_state(&inner)?;
        self.frames = frames;
        Ok(())
    }
}
