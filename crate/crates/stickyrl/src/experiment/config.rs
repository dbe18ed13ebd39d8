use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::brute::BruteConfig;
use crate::dqn::DqnConfig;
use crate::env::{GameSpec, DEFAULT_MAX_EPISODE_FRAMES};
use crate::error::ConfigError;
use crate::eval::DEFAULT_WINDOW;
use crate::td_linear::SarsaConfig;
use crate::wrappers::WrapperSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    Brute {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BruteConfig,
    },
    SarsaLambda {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: SarsaConfig,
    },
    DqnMini {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: DqnConfig,
    },
}

impl AgentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AgentSpec::Brute { .. } => "brute",
            AgentSpec::SarsaLambda { .. } => "sarsa_lambda",
            AgentSpec::DqnMini { .. } => "dqn_mini",
        }
    }

    /// Display name; defaults to the agent type.
    pub fn name(&self) -> &str {
        let name = match self {
            AgentSpec::Brute { name, .. } | AgentSpec::SarsaLambda { name, .. } | AgentSpec::DqnMini { name, .. } => {
                name
            }
        };
        name.as_deref().unwrap_or(self.kind())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let name = self.name();
        if name.is_empty() || name.contains("__") || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Invalid(format!(
                "agent name `{name}` must be ASCII letters, digits and single underscores"
            )));
        }
        let res = match self {
            AgentSpec::Brute { params, .. } => params.validate(),
            AgentSpec::SarsaLambda { params, .. } => params.validate(),
            AgentSpec::DqnMini { params, .. } => params.validate(),
        };
        res.map_err(|e| ConfigError::Invalid(format!("agent `{name}`: {e}")))
    }
}

/// Either one wrapper stack or several named ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stochasticity {
    Single(Vec<WrapperSpec>),
    Named(BTreeMap<String, Vec<WrapperSpec>>),
}

impl Default for Stochasticity {
    fn default() -> Self {
        Stochasticity::Single(vec![WrapperSpec::Sticky {
            varsigma: 0.25,
            frame_skip: 5,
        }])
    }
}

impl Stochasticity {
    /// (setting name, stack) pairs in name order.
    pub fn settings(&self) -> Vec<(String, Vec<WrapperSpec>)> {
        match self {
            Stochasticity::Single(stack) => vec![("default".to_string(), stack.clone())],
            Stochasticity::Named(map) => map.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    /// Hyperparameter search; recorded in the run ledger.
    #[default]
    Search,
    /// Final evaluation; refused if a search run touched a test game.
    Final,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agents: Vec<AgentSpec>,
    pub games: Vec<GameSpec>,
    #[serde(default)]
    pub stochasticity: Stochasticity,
    pub frame_budget: u64,
    #[serde(default)]
    pub milestones: Option<Vec<u64>>,
    #[serde(default = "default_k")]
    pub k: usize,
    pub trials_per_cell: u32,
    pub base_seed: u64,
    #[serde(default)]
    pub terminate_on_life_loss: bool,
    #[serde(default = "default_max_frames")]
    pub max_episode_frames: u32,
    #[serde(default)]
    pub training_games: Vec<GameSpec>,
    #[serde(default)]
    pub test_games: Vec<GameSpec>,
    #[serde(default)]
    pub purpose: Purpose,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub ledger: Option<String>,
}

fn default_k() -> usize {
    DEFAULT_WINDOW
}

fn default_max_frames() -> u32 {
    DEFAULT_MAX_EPISODE_FRAMES
}

/// 5%, 25%, 50% and 100% of the budget, rounded up.
pub fn default_milestones(budget: u64) -> Vec<u64> {
    let mut m: Vec<u64> = [5u64, 25, 50, 100]
        .iter()
        .map(|p| (budget * p).div_ceil(100).max(1))
        .collect();
    m.dedup();
    m
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        if cfg.milestones.is_none() {
            cfg.milestones = Some(default_milestones(cfg.frame_budget));
        }
        Ok(cfg)
    }

    pub fn milestones(&self) -> Vec<u64> {
        self.milestones
            .clone()
            .unwrap_or_else(|| default_milestones(self.frame_budget))
    }

    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.agents.is_empty() {
            return invalid("at least one agent is required".into());
        }
        if self.games.is_empty() {
            return invalid("at least one game is required".into());
        }
        if self.trials_per_cell == 0 {
            return invalid("trials_per_cell must be >= 1".into());
        }
        if self.frame_budget == 0 {
            return invalid("frame_budget must be >= 1".into());
        }
        if self.k == 0 {
            return invalid("k must be >= 1".into());
        }
        if self.max_episode_frames == 0 {
            return invalid("max_episode_frames must be >= 1".into());
        }
        let mut names = BTreeSet::new();
        for a in &self.agents {
            a.validate()?;
            if !names.insert(a.name().to_string()) {
                return invalid(format!("duplicate agent name `{}`", a.name()));
            }
        }
        let mut seen = BTreeSet::new();
        for g in &self.games {
            if !seen.insert(*g) {
                return invalid(format!("game {g} listed twice"));
            }
        }
        if let Some(ms) = self.milestones.as_mut() {
            if ms.is_empty() {
                return invalid("milestones must not be empty".into());
            }
            ms.sort_unstable();
            ms.dedup();
            if ms[0] == 0 || *ms.last().unwrap() > self.frame_budget {
                return invalid(format!("milestones must lie in [1, {}]", self.frame_budget));
            }
        }
        let settings = self.stochasticity.settings();
        if settings.is_empty() {
            return invalid("stochasticity must name at least one setting".into());
        }
        for (name, stack) in &settings {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return invalid(format!(
                    "setting name `{name}` must be ASCII letters, digits, `_` or `-`"
                ));
            }
            for w in stack {
                w.validate()?;
            }
        }
        let train: BTreeSet<_> = self.training_games.iter().collect();
        if let Some(g) = self.test_games.iter().find(|g| train.contains(g)) {
            return invalid(format!("{g} is in both training_games and test_games"));
        }
        Ok(())
    }
}
