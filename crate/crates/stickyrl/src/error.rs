use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("flavor not advertised: {0}")]
    FlavorNotAdvertised(String),
    #[error("malformed game spec `{0}`, expected name:mode:difficulty")]
    BadSpec(String),
    #[error("step called on a terminal episode; reset first")]
    StepAfterTerminal,
    #[error("action {action} out of range for {count} actions")]
    InvalidAction { action: usize, count: usize },
    #[error("snapshot from `{found}` cannot be restored into `{expected}`")]
    FlavorMismatch { expected: String, found: String },
    #[error("snapshot does not match this environment stack")]
    CorruptState,
    #[error("episode ended during initial no-ops twice in a row")]
    DegenerateNoops,
    #[error("invalid wrapper: {0}")]
    InvalidWrapper(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("learner diverged: {0}")]
    Divergence(String),
    #[error("transcript does not match the history tree: {0}")]
    TranscriptMismatch(String),
    #[error("action {action} out of range for {count} actions")]
    InvalidAction { action: usize, count: usize },
    #[error("history key collision detected at depth {depth}")]
    Collision { depth: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("both samples have zero variance")]
    DegenerateVariance,
    #[error("trial record is empty")]
    EmptyRecord,
    #[error("milestone {milestone} not reached (last cumulative frame count {reached})")]
    MilestoneNotReached { milestone: u64, reached: u64 },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}
