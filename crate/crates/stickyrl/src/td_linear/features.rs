use crate::env::{ActionId, GameName, GameSpec, Observation};
use crate::error::EnvError;

/// Active indices of a binary feature vector, strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparseFeatures(Vec<usize>);

impl SparseFeatures {
    /// Sorts and removes duplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SparseFeatures(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub trait FeatureMap: Send {
    fn dim(&self) -> usize;
    fn action_count(&self) -> usize;
    fn features(&self, obs: &Observation, action: ActionId) -> SparseFeatures;
}

/// One-hot over (state, action) with the state index given by a closure
/// over the payload.
pub struct Tabular {
    states: usize,
    actions: usize,
    index: fn(&[i32]) -> usize,
}

impl Tabular {
    pub fn new(states: usize, actions: usize, index: fn(&[i32]) -> usize) -> Self {
        Tabular { states, actions, index }
    }

    fn state(&self, obs: &Observation) -> usize {
        (self.index)(&obs.payload).min(self.states - 1)
    }
}

impl FeatureMap for Tabular {
    fn dim(&self) -> usize {
        self.states * self.actions
    }
    fn action_count(&self) -> usize {
        self.actions
    }
    fn features(&self, obs: &Observation, action: ActionId) -> SparseFeatures {
        SparseFeatures(vec![self.state(obs) * self.actions + action.0])
    }
}

/// Crossing: one tile over (row, action) and one over (hazard phase, action).
pub struct CrossingTiles {
    rows: usize,
    period: usize,
}

impl FeatureMap for CrossingTiles {
    fn dim(&self) -> usize {
        (self.rows + self.period) * 3
    }
    fn action_count(&self) -> usize {
        3
    }
    fn features(&self, obs: &Observation, action: ActionId) -> SparseFeatures {
        let row = (obs.payload[0].max(0) as usize).min(self.rows - 1);
        let phase = (obs.payload[1].max(0) as usize).min(self.period - 1);
        let a = action.0;
        SparseFeatures(vec![row * 3 + a, (self.rows + phase) * 3 + a])
    }
}

/// The extractor for a built-in game.
pub fn features_for(spec: GameSpec) -> Result<Box<dyn FeatureMap>, EnvError> {
    let (m, d) = (spec.mode, spec.difficulty);
    Ok(match spec.name {
        GameName::ChainWalk => {
            let len = if m == 2 { 16 } else { 8 };
            Box::new(Tabular::new(len, 3, |p| p[0].max(0) as usize))
        }
        GameName::CliffCorridor => {
            if m == 2 {
                Box::new(Tabular::new(21 * 2, 4, |p| {
                    p[0].max(0) as usize * 2 + p[1].clamp(0, 1) as usize
                }))
            } else {
                Box::new(Tabular::new(21, 4, |p| p[0].max(0) as usize))
            }
        }
        GameName::Crossing => Box::new(CrossingTiles {
            rows: if m == 2 { 6 } else { 4 },
            period: if d == 2 { 2 } else { 4 },
        }),
        GameName::KeyDoor => {
            let size = if m == 2 { 7 } else { 5 };
            let states = size * size * 2;
            match size {
                7 => Box::new(Tabular::new(states, 5, |p| {
                    ((p[1] * 7 + p[0]) * 2 + p[2]).max(0) as usize
                })),
                _ => Box::new(Tabular::new(states, 5, |p| {
                    ((p[1] * 5 + p[0]) * 2 + p[2]).max(0) as usize
                })),
            }
        }
    })
}
