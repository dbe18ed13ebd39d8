//! Environment contract and the built-in toy games.

mod chain_walk;
mod cliff_corridor;
mod crossing;
mod key_door;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EnvError;
use crate::wrappers::LayerState;

pub use chain_walk::ChainWalk;
pub use cliff_corridor::CliffCorridor;
pub use crossing::Crossing;
pub use key_door::KeyDoor;

/// Default per-episode frame cap.
pub const DEFAULT_MAX_EPISODE_FRAMES: u32 = 18_000;

/// Index into an environment's action set. Action 0 is always NOOP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

impl ActionId {
    pub const NOOP: ActionId = ActionId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for ActionId {
    fn from(i: usize) -> Self {
        ActionId(i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub payload: Vec<i32>,
    pub lives: Option<u32>,
    /// Raw change in game score since the previous observation.
    pub score_delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Observation,
    /// Agent-facing reward. Equals `observation.score_delta` unless a reward
    /// transform is in the stack.
    pub reward: f64,
    pub terminal: bool,
    pub frames_consumed: u32,
}

/// Full snapshot of an environment stack. Opaque to callers; only the
/// producing game+flavor accepts it back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub(crate) flavor: String,
    pub(crate) frame: u32,
    pub(crate) terminal: bool,
    pub(crate) data: Vec<i64>,
    pub(crate) layers: Vec<LayerState>,
}

impl EnvState {
    pub fn flavor(&self) -> &str {
        &self.flavor
    }

    pub fn episode_frame(&self) -> u32 {
        self.frame
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameName {
    ChainWalk,
    CliffCorridor,
    Crossing,
    KeyDoor,
}

impl GameName {
    pub const ALL: [GameName; 4] = [
        GameName::ChainWalk,
        GameName::CliffCorridor,
        GameName::Crossing,
        GameName::KeyDoor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameName::ChainWalk => "chain_walk",
            GameName::CliffCorridor => "cliff_corridor",
            GameName::Crossing => "crossing",
            GameName::KeyDoor => "key_door",
        }
    }

    /// Advertised (mode, difficulty) pairs.
    pub fn flavors(self) -> &'static [(u32, u32)] {
        &[(1, 1), (1, 2), (2, 1), (2, 2)]
    }
}

impl FromStr for GameName {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GameName::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| EnvError::UnknownGame(s.to_string()))
    }
}

/// A game plus flavor, written `name:mode:difficulty`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GameSpec {
    pub name: GameName,
    pub mode: u32,
    pub difficulty: u32,
}

impl GameSpec {
    pub fn new(name: GameName, mode: u32, difficulty: u32) -> Result<Self, EnvError> {
        let spec = GameSpec { name, mode, difficulty };
        if !name.flavors().contains(&(mode, difficulty)) {
            return Err(EnvError::FlavorNotAdvertised(spec.to_string()));
        }
        Ok(spec)
    }

    /// File-name friendly form, `name-mode-difficulty`.
    pub fn slug(&self) -> String {
        format!("{}-{}-{}", self.name.as_str(), self.mode, self.difficulty)
    }

    pub fn from_slug(s: &str) -> Result<Self, EnvError> {
        s.replace('-', ":").parse()
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.name.as_str(), self.mode, self.difficulty)
    }
}

impl FromStr for GameSpec {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, mode, diff] = parts.as_slice() else {
            return Err(EnvError::BadSpec(s.to_string()));
        };
        let name: GameName = name.parse()?;
        let mode = mode.parse().map_err(|_| EnvError::BadSpec(s.to_string()))?;
        let difficulty = diff.parse().map_err(|_| EnvError::BadSpec(s.to_string()))?;
        GameSpec::new(name, mode, difficulty)
    }
}

impl Serialize for GameSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GameSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The episodic environment contract shared by games and wrappers.
pub trait Environment: Send {
    fn flavor(&self) -> &str;
    fn action_count(&self) -> usize;
    fn observation_len(&self) -> usize;
    fn max_episode_frames(&self) -> u32;
    /// Frames elapsed in the current episode.
    fn episode_frame(&self) -> u32;
    fn is_terminal(&self) -> bool;
    fn lives(&self) -> Option<u32>;

    fn reset(&mut self) -> Result<Observation, EnvError>;
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError>;

    fn save_state(&self) -> EnvState;
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError>;

    /// Frames the last `reset` advanced before handing over control.
    fn reset_frames(&self) -> u32 {
        0
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn flavor(&self) -> &str {
        (**self).flavor()
    }
    fn action_count(&self) -> usize {
        (**self).action_count()
    }
    fn observation_len(&self) -> usize {
        (**self).observation_len()
    }
    fn max_episode_frames(&self) -> u32 {
        (**self).max_episode_frames()
    }
    fn episode_frame(&self) -> u32 {
        (**self).episode_frame()
    }
    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
    fn lives(&self) -> Option<u32> {
        (**self).lives()
    }
    fn reset(&mut self) -> Result<Observation, EnvError> {
        (**self).reset()
    }
    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        (**self).step(action)
    }
    fn save_state(&self) -> EnvState {
        (**self).save_state()
    }
    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        (**self).restore_state(state)
    }
    fn reset_frames(&self) -> u32 {
        (**self).reset_frames()
    }
}

/// Frame-level game logic. `GameEnv` adds frame accounting, the episode cap
/// and terminal bookkeeping on top.
pub trait Game: Send + Clone {
    fn action_count(&self) -> usize;
    fn observation_len(&self) -> usize;
    fn reset(&mut self);
    /// Advance one frame. `frame` is the index of this frame within the
    /// episode. Returns (score delta, game over).
    fn advance(&mut self, action: usize, frame: u32) -> (i64, bool);
    fn payload(&self, frame: u32) -> Vec<i32>;
    fn lives(&self) -> Option<u32> {
        None
    }
    fn encode(&self) -> Vec<i64>;
    fn decode(&mut self, data: &[i64]) -> Option<()>;
}

#[derive(Clone, Debug)]
pub struct GameEnv<G: Game> {
    game: G,
    flavor: String,
    max_frames: u32,
    frame: u32,
    terminal: bool,
}

impl<G: Game> GameEnv<G> {
    pub fn new(game: G, flavor: String, max_frames: u32) -> Self {
        let mut env = GameEnv {
            game,
            flavor,
            max_frames: max_frames.max(1),
            frame: 0,
            terminal: false,
        };
        env.game.reset();
        env
    }

    pub fn game(&self) -> &G {
        &self.game
    }

    fn observe(&self, score_delta: i64) -> Observation {
        Observation {
            payload: self.game.payload(self.frame),
            lives: self.game.lives(),
            score_delta,
        }
    }
}

impl<G: Game> Environment for GameEnv<G> {
    fn flavor(&self) -> &str {
        &self.flavor
    }
    fn action_count(&self) -> usize {
        self.game.action_count()
    }
    fn observation_len(&self) -> usize {
        self.game.observation_len()
    }
    fn max_episode_frames(&self) -> u32 {
        self.max_frames
    }
    fn episode_frame(&self) -> u32 {
        self.frame
    }
    fn is_terminal(&self) -> bool {
        self.terminal
    }
    fn lives(&self) -> Option<u32> {
        self.game.lives()
    }

    fn reset(&mut self) -> Result<Observation, EnvError> {
        self.game.reset();
        self.frame = 0;
        self.terminal = false;
        Ok(self.observe(0))
    }

    fn step(&mut self, action: ActionId) -> Result<StepResult, EnvError> {
        if self.terminal {
            return Err(EnvError::StepAfterTerminal);
        }
        let count = self.game.action_count();
        if action.0 >= count {
            return Err(EnvError::InvalidAction {
                action: action.0,
                count,
            });
        }
        let (delta, over) = self.game.advance(action.0, self.frame);
        self.frame += 1;
        self.terminal = over || self.frame >= self.max_frames;
        Ok(StepResult {
            observation: self.observe(delta),
            reward: delta as f64,
            terminal: self.terminal,
            frames_consumed: 1,
        })
    }

    fn save_state(&self) -> EnvState {
        EnvState {
            flavor: self.flavor.clone(),
            frame: self.frame,
            terminal: self.terminal,
            data: self.game.encode(),
            layers: Vec::new(),
        }
    }

    fn restore_state(&mut self, state: &EnvState) -> Result<(), EnvError> {
        if state.flavor != self.flavor {
            return Err(EnvError::FlavorMismatch {
                expected: self.flavor.clone(),
                found: state.flavor.clone(),
            });
        }
        if !state.layers.is_empty() {
            return Err(EnvError::CorruptState);
        }
        let mut game = self.game.clone();
        game.decode(&state.data).ok_or(EnvError::CorruptState)?;
        self.game = game;
        self.frame = state.frame;
        self.terminal = state.terminal;
        Ok(())
    }
}

/// Build a game at its initial configuration with the default frame cap.
pub fn make_env(spec: GameSpec) -> Box<dyn Environment> {
    make_env_with_cap(spec, DEFAULT_MAX_EPISODE_FRAMES)
}

pub fn make_env_with_cap(spec: GameSpec, max_episode_frames: u32) -> Box<dyn Environment> {
    let flavor = spec.to_string();
    let (m, d) = (spec.mode, spec.difficulty);
    match spec.name {
        GameName::ChainWalk => Box::new(GameEnv::new(ChainWalk::new(m, d), flavor, max_episode_frames)),
        GameName::CliffCorridor => Box::new(GameEnv::new(CliffCorridor::new(m, d), flavor, max_episode_frames)),
        GameName::Crossing => Box::new(GameEnv::new(Crossing::new(m, d), flavor, max_episode_frames)),
        GameName::KeyDoor => Box::new(GameEnv::new(KeyDoor::new(m, d), flavor, max_episode_frames)),
    }
}

/// Parse `name:mode:difficulty` and build the game.
pub fn make_env_str(spec: &str) -> Result<Box<dyn Environment>, EnvError> {
    Ok(make_env(spec.parse()?))
}
