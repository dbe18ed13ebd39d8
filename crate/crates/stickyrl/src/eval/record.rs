use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::agent::EpisodeOutcome;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: u32,
    pub score: i64,
    pub decisions: u32,
    pub frames: u64,
    pub cum_frames: u64,
}

/// Episode log of one seeded agent/game run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub agent: String,
    pub game: String,
    pub trial: u32,
    pub seed: u64,
    pub episodes: Vec<EpisodeLog>,
    /// Set when the trial stopped on an error; the episodes so far are kept.
    pub failure: Option<String>,
}

/// One JSONL line.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    trial: u32,
    episode: u32,
    score: i64,
    frames: u64,
    cum_frames: u64,
}

impl TrialRecord {
    pub fn new(agent: impl Into<String>, game: impl Into<String>, trial: u32, seed: u64) -> Self {
        TrialRecord {
            agent: agent.into(),
            game: game.into(),
            trial,
            seed,
            ..Default::default()
        }
    }

    pub fn push(&mut self, ep: EpisodeOutcome) {
        let cum = self.total_frames() + ep.frames;
        self.episodes.push(EpisodeLog {
            episode: self.episodes.len() as u32,
            score: ep.score,
            decisions: ep.decisions,
            frames: ep.frames,
            cum_frames: cum,
        });
    }

    pub fn total_frames(&self) -> u64 {
        self.episodes.last().map_or(0, |e| e.cum_frames)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.score as f64).collect()
    }

    /// Cumulative counts strictly increase and match the per-episode sums.
    pub fn frames_consistent(&self) -> bool {
        let mut sum = 0;
        self.episodes.iter().all(|e| {
            let prev = sum;
            sum += e.frames;
            e.cum_frames == sum && e.cum_frames > prev
        })
    }

    /// One line per episode with keys trial, episode, score, frames,
    /// cum_frames. Decision counts are not persisted.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.episodes {
            let line = Line {
                trial: self.trial,
                episode: e.episode,
                score: e.score,
                frames: e.frames,
                cum_frames: e.cum_frames,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(agent: &str, game: &str, r: R) -> std::io::Result<Self> {
        let mut rec = TrialRecord::new(agent, game, 0, 0);
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let l: Line = serde_json::from_str(&line)?;
            rec.trial = l.trial;
            rec.episodes.push(EpisodeLog {
                episode: l.episode,
                score: l.score,
                decisions: 0,
                frames: l.frames,
                cum_frames: l.cum_frames,
            });
        }
        Ok(rec)
    }
}
