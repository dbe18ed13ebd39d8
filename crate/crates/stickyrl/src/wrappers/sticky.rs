use rand::Rng as _;

use super::{check_action, delegate_env, pop_layer, push_layer, Accumulator, LayerState};
use crate::env::{ActionId, EnvState, Environment, Observation, StepResult};
use crate::error::EnvError;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StickyConfig {
    varsigma: f64,
    frame_skip: u32,
}

impl StickyConfig {
    pub fn new(varsigma: f64, frame_skip: u32) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&varsigma) {
            return Err(EnvError::InvalidWrapper(format!("varsigma {varsigma} outside [0, 1]")));
        }
        if frame_skip == 0 {
            return Err(EnvError::InvalidWrapper("frame_skip must be >= 1".into()));
        }
        Ok(StickyConfig { varsigma, frame_skip })
    }

    pub fn varsigma(&self) -> f64 {
        self.varsigma
    }

    pub fn frame_skip(&self) -> u32 {
        self.frame_skip
    }
}

/// Executed action for one frame: the previous executed action when
/// `u < varsigma`, otherwise the agent's intent.
pub fn sticky_resolve(intent: ActionId, prev_executed: ActionId, u: f64, varsigma: f64) -> ActionId {
    if u < varsigma {
        prev_executed
    } else {
        intent
    }
}

/// Per-frame (intent, executed) pairs of the last step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutedActionTrace {
    pub frames: Vec<(ActionId, ActionId)>,
}

impl ExecutedActionTrace {
    pub fn intercepted(&self) -> usize {
        self.frames.iter().filter(|(i, e)| i != e).count()
    }
}

/// Sticky actions with frame skipping. Each frame of the window draws a
/// fresh uniform and resolves against the previously executed action, which
/// starts every episode as NOOP.
pub struct Sticky<E = Box<dyn Environment>> {
    inner: E,
    cfg: StickyConfig,
    rng: Rng,
    prev: ActionId,
    trace: ExecutedActionTrace,
}

impl<E: Environment> Sticky<E> {
    pub fn new(inner: E, cfg: StickyConfig, rng: Rng) -> Self {
        Sticky {
            inner,
            cfg,
            rng,
            prev: ActionId::NOOP,
            trace: ExecutedActionTrace::default(),
        }
    }

    pub fn config(&self) -> StickyConfig {
        self.cfg
    }

    pub fn last_trace(&self) -> &ExecutedActionTrace {
        &self.trace
    }

    pub fn prev_executed(&self) -> ActionId {
        self.prev
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for Sticky<E> {
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
        self.prev = ActionId::NOOP;
        self.trace.frames.clear();
        self.inner.reset()
    }

    fn step(&mut self, intent: ActionId) -> Result<StepResult, EnvError> {
        check_action(&self.inner, intent)?;
        if self.inner.is_terminal() {
            return Err(EnvError::StepAfterTerminal);
        }
        self.trace.frames.clear();
        let mut acc = Accumulator::default();
        for _ in 0..self.cfg.frame_skip {
            let u: f64 = self.rng.gen();
            let executed = sticky_resolve(intent, self.prev, u, self.cfg.varsigma);
            let r = self.inner.step(executed)?;
            self.prev = executed;
            self.trace.frames.push((intent, executed));
            if acc.push(r) {
                break;
            }
        }
        Ok(acc.finish())
    }

    fn save_state(&self) -> EnvState {
        push_layer(
            self.inner.save_state(),
            LayerState::Sticky {
                prev: self.prev.0,
                rng: self.rng.clone(),
            },
        )
    }

    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        let (inner, layer) = pop_layer(state)?;
        let LayerState::Sticky { prev, rng } = layer else {
            return Err(EnvError::CorruptState);
        };
        self.inner.restore_state(&inner)?;
        self.prev = ActionId(prev);
        self.rng = rng;
        self.trace.frames.clear();
        Ok(())
    }
}
