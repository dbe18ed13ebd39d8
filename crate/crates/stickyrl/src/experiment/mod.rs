//! Config-driven experiment grids: seeding, parallel trial execution and
//! report artifacts.

mod config;
mod ledger;
mod report;
mod runner;
mod seed;
mod svg;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{default_milestones, AgentSpec, ExperimentConfig, Purpose, Stochasticity};
pub use ledger::{contaminated, read_ledger, record_run, LedgerEntry};
pub use report::{
    curve_file_name, milestone_csv, parse_record_file_name, record_file_name, report_from_records, summary_csv,
    welch_csv, write_reports, write_setting, Manifest, BEST_WINDOW_NOTE, MILESTONE_HEADER, SUMMARY_HEADER,
    WELCH_HEADER,
};
pub use runner::{build_agent, build_env, plan, run_all, run_trial, TrialOutput, TrialSpec};
pub use seed::trial_seed;
pub use svg::{emit_curves, mean_curve, trailing_curve};

use crate::error::ConfigError;
use crate::rng::stable_hash;

pub const LEDGER_FILE: &str = "run_ledger.jsonl";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("final run refused: search runs already touched test games {0:?}")]
    TestGamesTouched(Vec<String>),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// What a completed run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub trials: usize,
    pub failed: usize,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

/// Digest of everything that affects results. The output location is left
/// out so moving a run does not change its identity.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = None;
    c.ledger = None;
    let text = serde_json::to_string(&c).expect("config serializes");
    format!("{:016x}", stable_hash(text.as_bytes()))
}

/// Run every trial of `cfg` and write artifacts under `out`, one directory
/// per stochasticity setting. Failed trials are kept in the artifacts and
/// counted in the summary.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize, out: &Path) -> Result<RunSummary, RunError> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let ledger_path = cfg
        .ledger
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join(LEDGER_FILE));
    let test_games: Vec<String> = cfg.test_games.iter().map(|g| g.to_string()).collect();
    if cfg.purpose == Purpose::Final && !test_games.is_empty() {
        let hit = contaminated(&read_ledger(&ledger_path)?, &test_games);
        if !hit.is_empty() {
            return Err(RunError::TestGamesTouched(hit));
        }
    }

    fs::create_dir_all(out)?;
    let specs = plan(&cfg);
    let outputs = run_all(&specs, jobs);
    let milestones = cfg.milestones();
    let agents: Vec<String> = cfg.agents.iter().map(|a| a.name().to_string()).collect();
    let games: Vec<String> = cfg.games.iter().map(|g| g.to_string()).collect();
    let settings = cfg.stochasticity.settings();

    for (setting, _) in &settings {
        let manifest = Manifest {
            setting: setting.clone(),
            frame_budget: cfg.frame_budget,
            milestones: milestones.clone(),
            k: cfg.k,
            agents: agents.clone(),
            games: games.clone(),
            best_window_note: BEST_WINDOW_NOTE.to_string(),
        };
        let mine: Vec<&TrialOutput> = outputs.iter().filter(|o| &o.setting == setting).collect();
        write_setting(&out.join(setting), &manifest, &mine)?;
    }
    let settings_map: std::collections::BTreeMap<_, _> = settings.into_iter().collect();
    fs::write(
        out.join("settings.json"),
        serde_json::to_string_pretty(&settings_map).map_err(io::Error::from)? + "\n",
    )?;

    record_run(
        &ledger_path,
        &LedgerEntry {
            config_digest: config_digest(&cfg),
            purpose: cfg.purpose,
            games,
        },
    )?;

    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        trials: outputs.len(),
        failed: outputs.iter().filter(|o| o.record.failure.is_some()).count(),
    })
}
