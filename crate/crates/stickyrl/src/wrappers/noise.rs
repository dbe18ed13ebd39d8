use rand::Rng as _;

use super::{check_action, delegate_env, pop_layer, push_layer, LayerState};
use crate::env::{ActionId, EnvState, Environment, Observation, StepResult};
use crate::error::EnvError;
use crate::rng::Rng;

/// With probability `eps` the intent is replaced by a uniformly drawn action.
pub struct ActionNoise<E = Box<dyn Environment>> {
    inner: E,
    eps: f64,
    rng: Rng,
    draws: u64,
    replacements: u64,
}

impl<E: Environment> ActionNoise<E> {
    pub fn new(inner: E, eps: f64, rng: Rng) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(EnvError::InvalidWrapper(format!(
                "action_noise eps {eps} outside [0, 1]"
            )));
        }
        Ok(ActionNoise {
            inner,
            eps,
            rng,
            draws: 0,
            replacements: 0,
        })
    }

    /// (steps taken, steps whose intent was replaced).
    pub fn counts(&self) -> (u64, u64) {
        (self.draws, self.replacements)
    }
}

impl<E: Environment> Environment for ActionNoise<E> {
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
    fn step(&mut self, intent: ActionId) -> Result<StepResult, EnvError> {
        check_action(&self.inner, intent)?;
        if self.inner.is_terminal() {
            return Err(EnvError::StepAfterTerminal);
        }
        self.draws += 1;
        let action = if self.rng.gen::<f64>() < self.eps {
            self.replacements += 1;
            ActionId(self.rng.gen_range(0..self.inner.action_count()))
        } else {
            intent
        };
        self.inner.step(action)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::ActionNoise {
                rng: self.rng.clone(),
                draws: self.draws,
                replacements: self.replacements,
            },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::ActionNoise {
            rng,
            draws,
            replacements,
        } = layer
        else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.rng = rng;
        self.draws = draws;
        self.replacements = replacements;
        Ok(())
    }
}

/// On reset, plays a uniformly drawn number of NOOPs in `0..=k_max` before
/// handing control to the agent. Those frames count toward the episode.
pub struct InitialNoops<E = Box<dyn Environment>> {
    inner: E,
    k_max: u32,
    rng: Rng,
    last: u32,
    frames: u32,
}

impl<E: Environment> InitialNoops<E> {
    pub fn new(inner: E, k_max: u32, rng: Rng) -> Self {
        InitialNoops {
            inner,
            k_max,
            rng,
            last: 0,
            frames: 0,
        }
    }

    /// NOOPs played by the last reset.
    pub fn last_noops(&self) -> u32 {
        self.last
    }

    fn try_reset(&mut self) -> Result<Option<Observation>, EnvError> {
        let mut obs = self.inner.reset()?;
        let m = self.rng.gen_range(0..=self.k_max);
        self.last = m;
        self.frames = self.inner.reset_frames();
        for _ in 0..m {
            let r = self.inner.step(ActionId::NOOP)?;
            self.frames += r.frames_consumed;
            if r.terminal {
                return Ok(None);
            }
            obs = r.observation;
        }
        obs.score_delta = 0;
        Ok(Some(obs))
    }
}

impl<E: Environment> Environment for InitialNoops<E> {
    delegate_env!();

    fn observation_len(&self) -> usize {
        self.inner.observation_len()
    }
    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }
    fn reset_frames(&self) -> u32 {
        self.frames
    }
    fn reset(&mut self) -> Result<Observation, EnvError> {
        if let Some(obs) = self.try_reset()? {
            return Ok(obs);
        }
        self.try_reset()?.ok_or(EnvError::DegenerateNoops)
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        self.inner.step(action)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::InitialNoops {
                rng: self.rng.clone(),
                last: self.last,
                frames: self.frames,
            },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::InitialNoops { rng, last, frames } = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.rng = rng;
        self.last = last;
        self.frames = frames;
        Ok(())
    }
}

/// Episodes start from a state drawn uniformly from a fixed library of
/// snapshots. The library comes from seeded scripted play at construction;
/// it stands in for recorded human play. Frames played to reach a snapshot
/// are not charged to the agent.
pub struct HumanStarts<E = Box<dyn Environment>> {
    inner: E,
    library: Vec<(EnvState, Observation)>,
    rng: Rng,
    last: usize,
}

impl<E: Environment> HumanStarts<E> {
    /// Record `count` snapshots, each after a random play-through of
    /// `1..=max_len` steps that did not end the episode.
    pub fn generate(mut inner: E, count: usize, max_len: u32, mut rng: Rng) -> Result<Self, EnvError> {
        if count == 0 || max_len == 0 {
            return Err(EnvError::InvalidWrapper(
                "human_starts needs count >= 1 and max_len >= 1".into(),
            ));
        }
        let mut library = Vec::with_capacity(count);
        let mut attempts = 0;
        while library.len() < count {
            attempts += 1;
            if attempts > count * 100 {
                return Err(EnvError::InvalidWrapper(
                    "could not record non-terminal start states".into(),
                ));
            }
            let mut obs = inner.reset()?;
            let len = rng.gen_range(1..=max_len);
            let mut alive = true;
            for _ in 0..len {
                let a = ActionId(rng.gen_range(0..inner.action_count()));
                let r = inner.step(a)?;
                if r.terminal {
                    alive = false;
                    break;
                }
                obs = r.observation;
            }
            if alive {
                obs.score_delta = 0;
                library.push((inner.save_state(), obs));
            }
        }
        inner.reset()?;
        Ok(HumanStarts {
            inner,
            library,
            rng,
            last: 0,
        })
    }

    pub fn library(&self) -> &[(EnvState, Observation)] {
        &self.library
    }

    /// Library index used by the last reset.
    pub fn last_start(&self) -> usize {
        self.last
    }
}

impl<E: Environment> Environment for HumanStarts<E> {
    delegate_env!();

    fn observation_len(&self) -> usize {
        self.inner.observation_len()
    }
    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }
    fn reset_frames(&self) -> u32 {
        0
    }
    fn reset(&mut self) -> Result<Observation, EnvError> {
        self.inner.reset()?;
        self.last = self.rng.gen_range(0..self.library.len());
        let (state, obs) = &self.library[self.last];
        self.inner.restore_state(state)?;
        Ok(obs.clone())
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        self.inner.step(action)
    }
    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::HumanStarts {
                rng: self.rng.clone(),
                last: self.last,
            },
        )
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::HumanStarts { rng, last } = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.rng = rng;
        self.last = last;
        Ok(())
    }
}
