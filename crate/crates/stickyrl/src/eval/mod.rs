//! Milestone reporting, trial aggregation, summary metrics and Welch's test.

mod record;
pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::StatsError;

pub use record::{EpisodeLog, TrialRecord};

pub const DEFAULT_WINDOW: usize = 100;

/// Trailing-window mean at one milestone of one trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilestonePoint {
    pub value: f64,
    /// Index of the first episode ending at or after the milestone.
    pub boundary_episode: usize,
    /// Episodes actually averaged.
    pub used: usize,
    /// Fewer than k episodes were available.
    pub clamped: bool,
}

pub fn milestone_point(trial: &TrialRecord, milestone: u64, k: usize) -> Result<MilestonePoint, StatsError> {
    if trial.episodes.is_empty() {
        return Err(StatsError::EmptyRecord);
    }
    let boundary =
        trial
            .episodes
            .iter()
            .position(|e| e.cum_frames >= milestone)
            .ok_or(StatsError::MilestoneNotReached {
                milestone,
                reached: trial.total_frames(),
            })?;
    let k = k.max(1);
    let used = k.min(boundary + 1);
    let window = &trial.episodes[boundary + 1 - used..=boundary];
    let value = window.iter().map(|e| e.score as f64).sum::<f64>() / used as f64;
    Ok(MilestonePoint {
        value,
        boundary_episode: boundary,
        used,
        clamped: used < k,
    })
}

/// Mean of the last `min(k, available)` episode scores at the first episode
/// boundary at or after `milestone` frames.
pub fn milestone_score(trial: &TrialRecord, milestone: u64, k: usize) -> Result<f64, StatsError> {
    milestone_point(trial, milestone, k).map(|p| p.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilestoneReport {
    pub milestone_frames: u64,
    pub k: usize,
    pub n_trials: usize,
    /// Per-trial milestone scores ordered by trial index.
    pub per_trial: Vec<f64>,
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 when n = 1.
    pub std: f64,
    pub single_trial: bool,
    pub window_clamped: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n - 1 denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn aggregate(trials: &[TrialRecord], milestone: u64, k: usize) -> Result<MilestoneReport, StatsError> {
    if trials.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut ordered: Vec<&TrialRecord> = trials.iter().collect();
    ordered.sort_by_key(|t| t.trial);
    let points = ordered
        .iter()
        .map(|t| milestone_point(t, milestone, k))
        .collect::<Result<Vec<_>, _>>()?;
    let per_trial: Vec<f64> = points.iter().map(|p| p.value).collect();
    let n = per_trial.len();
    Ok(MilestoneReport {
        milestone_frames: milestone,
        k,
        n_trials: n,
        mean: mean(&per_trial),
        std: if n > 1 { sample_variance(&per_trial).sqrt() } else { 0.0 },
        single_trial: n == 1,
        window_clamped: points.iter().any(|p| p.clamped),
        per_trial,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewSamples {
                needed: 2,
                got: s.len(),
            });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sample_variance(a) / na;
    let vb = sample_variance(b) / nb;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: special::student_t_two_sided(t, df),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    /// Frame-weighted mean episode score over the whole run.
    pub auc: f64,
    /// Best trailing-k window mean. Optimistically biased: it is a maximum
    /// over many noisy windows.
    pub best_window: f64,
    pub final_window: f64,
}

pub fn summary_metrics(trial: &TrialRecord, k: usize) -> Result<SummaryMetrics, StatsError> {
    let eps = &trial.episodes;
    if eps.is_empty() {
        return Err(StatsError::EmptyRecord);
    }
    let frames: u64 = eps.iter().map(|e| e.frames).sum();
    let auc = if frames == 0 {
        mean(&trial.scores())
    } else {
        eps.iter().map(|e| e.score as f64 * e.frames as f64).sum::<f64>() / frames as f64
    };
    let k = k.max(1).min(eps.len());
    let scores = trial.scores();
    let best_window = scores
        .windows(k)
        .map(|w| w.iter().sum::<f64>() / k as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let final_window = mean(&scores[scores.len() - k..]);
    Ok(SummaryMetrics {
        auc,
        best_window,
        final_window,
    })
}
