use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::GameSpec;
use crate::eval::{aggregate, summary_metrics, welch_t_test, TrialRecord};

use super::runner::TrialOutput;
use super::svg::emit_curves;

pub const MILESTONE_HEADER: &str = "game,agent,milestone_frames,n_trials,mean,std,k";
pub const WELCH_HEADER: &str = "game,agent_a,agent_b,milestone,t,df,p";
pub const SUMMARY_HEADER: &str = "game,agent,trial,auc,best_window,final_window";

/// Written next to the JSONL records so reports can be rebuilt from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub setting: String,
    pub frame_budget: u64,
    pub milestones: Vec<u64>,
    pub k: usize,
    pub agents: Vec<String>,
    pub games: Vec<String>,
    pub best_window_note: String,
}

pub const BEST_WINDOW_NOTE: &str =
    "best_window is the maximum over all trailing windows of a run and overstates the score of any single policy";

pub fn record_file_name(agent: &str, game: &str, trial: u32) -> String {
    let slug = game
        .parse::<GameSpec>()
        .map(|g| g.slug())
        .unwrap_or_else(|_| game.replace(':', "-"));
    format!("{agent}__{slug}__t{trial:03}.jsonl")
}

/// Inverse of `record_file_name`.
pub fn parse_record_file_name(name: &str) -> Option<(String, String, u32)> {
    let stem = name.strip_suffix(".jsonl")?;
    let mut parts = stem.split("__");
    let agent = parts.next()?;
    let game = GameSpec::from_slug(parts.next()?).ok()?;
    let trial = parts.next()?.strip_prefix('t')?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((agent.to_string(), game.to_string(), trial))
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// Records grouped by (game, agent) in manifest order, trials ascending.
fn grouped<'a>(m: &Manifest, records: &'a [TrialRecord]) -> Vec<(String, String, Vec<&'a TrialRecord>)> {
    let mut out = Vec::new();
    for game in &m.games {
        for agent in &m.agents {
            let mut recs: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| &r.game == game && &r.agent == agent && r.failure.is_none())
                .collect();
            recs.sort_by_key(|r| r.trial);
            out.push((game.clone(), agent.clone(), recs));
        }
    }
    out
}

pub fn milestone_csv(m: &Manifest, records: &[TrialRecord]) -> String {
    let mut s = format!("{MILESTONE_HEADER}\n");
    for (game, agent, recs) in grouped(m, records) {
        let recs: Vec<TrialRecord> = recs.into_iter().cloned().collect();
        for &ms in &m.milestones {
            if let Ok(r) = aggregate(&recs, ms, m.k) {
                let _ = writeln!(
                    s,
                    "{game},{agent},{ms},{},{},{},{}",
                    r.n_trials,
                    fmt_f(r.mean),
                    fmt_f(r.std),
                    m.k
                );
            }
        }
    }
    s
}

pub fn welch_csv(m: &Manifest, records: &[TrialRecord]) -> String {
    let mut s = format!("{WELCH_HEADER}\n");
    let groups = grouped(m, records);
    let by_key: BTreeMap<(&str, &str), Vec<TrialRecord>> = groups
        .iter()
        .map(|(g, a, r)| ((g.as_str(), a.as_str()), r.iter().map(|x| (*x).clone()).collect()))
        .collect();
    for game in &m.games {
        for (i, a) in m.agents.iter().enumerate() {
            for b in &m.agents[i + 1..] {
                for &ms in &m.milestones {
                    let per = |agent: &str| {
                        aggregate(&by_key[&(game.as_str(), agent)], ms, m.k)
                            .map(|r| r.per_trial)
                            .unwrap_or_default()
                    };
                    let (t, df, p) = match welch_t_test(&per(a), &per(b)) {
                        Ok(w) => (w.t, w.df, w.p),
                        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                    };
                    let _ = writeln!(s, "{game},{a},{b},{ms},{},{},{}", fmt_f(t), fmt_f(df), fmt_f(p));
                }
            }
        }
    }
    s
}

pub fn summary_csv(m: &Manifest, records: &[TrialRecord]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for (game, agent, recs) in grouped(m, records) {
        for r in recs {
            if let Ok(sm) = summary_metrics(r, m.k) {
                let _ = writeln!(
                    s,
                    "{game},{agent},{},{},{},{}",
                    r.trial,
                    fmt_f(sm.auc),
                    fmt_f(sm.best_window),
                    fmt_f(sm.final_window)
                );
            }
        }
    }
    s
}

pub fn curve_file_name(agent: &str, game: &str) -> String {
    let slug = game
        .parse::<GameSpec>()
        .map(|g| g.slug())
        .unwrap_or_else(|_| game.replace(':', "-"));
    format!("{agent}__{slug}.svg")
}

/// Milestone, Welch and summary CSVs plus one SVG per (agent, game), all
/// derived from the records alone.
pub fn write_reports(dir: &Path, m: &Manifest, records: &[TrialRecord]) -> io::Result<()> {
    fs::write(dir.join("milestones.csv"), milestone_csv(m, records))?;
    fs::write(dir.join("welch.csv"), welch_csv(m, records))?;
    fs::write(dir.join("summary.csv"), summary_csv(m, records))?;
    let curves = dir.join("curves");
    fs::create_dir_all(&curves)?;
    for (game, agent, recs) in grouped(m, records) {
        if recs.is_empty() {
            continue;
        }
        let recs: Vec<TrialRecord> = recs.into_iter().cloned().collect();
        let title = format!("{agent} on {game} ({})", m.setting);
        fs::write(
            curves.join(curve_file_name(&agent, &game)),
            emit_curves(&recs, m.k, &title),
        )?;
    }
    Ok(())
}

fn write_weights(path: &Path, w: &[f64]) -> io::Result<()> {
    let bytes: Vec<u8> = w.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)
}

/// Everything for one stochasticity setting under `dir`.
pub fn write_setting(dir: &Path, m: &Manifest, outputs: &[&TrialOutput]) -> io::Result<()> {
    let records_dir = dir.join("records");
    let weights_dir = dir.join("weights");
    fs::create_dir_all(&records_dir)?;
    fs::write(
        records_dir.join("manifest.json"),
        serde_json::to_string_pretty(m)? + "\n",
    )?;

    let mut diagnostics = String::from("game,agent,trial,milestone_frames,node_count,max_depth,total_visits\n");
    let mut failures = String::new();
    for o in outputs {
        let r = &o.record;
        let mut buf = Vec::new();
        r.write_jsonl(&mut buf)?;
        fs::write(records_dir.join(record_file_name(&r.agent, &r.game, r.trial)), buf)?;
        if let Some(f) = &r.failure {
            let _ = writeln!(failures, "{},{},{}: {f}", r.agent, r.game, r.trial);
        }
        for (ms, snap) in &o.snapshots {
            if let Some(t) = snap.tree {
                let _ = writeln!(
                    diagnostics,
                    "{},{},{},{ms},{},{},{}",
                    r.game, r.agent, r.trial, t.node_count, t.max_depth, t.total_visits
                );
            }
            if let Some(w) = &snap.weights {
                fs::create_dir_all(&weights_dir)?;
                let stem = record_file_name(&r.agent, &r.game, r.trial);
                let stem = stem.trim_end_matches(".jsonl");
                write_weights(&weights_dir.join(format!("{stem}__m{ms}.bin")), w)?;
            }
        }
    }
    fs::write(dir.join("diagnostics.csv"), diagnostics)?;
    if !failures.is_empty() {
        fs::write(dir.join("failures.txt"), failures)?;
    }
    let records: Vec<TrialRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    write_reports(dir, m, &records)
}

/// Rebuild the CSV and SVG reports from a records directory. Reports go to
/// the records directory's parent.
pub fn report_from_records(records_dir: &Path) -> io::Result<PathBuf> {
    let manifest: Manifest =
        serde_json::from_reader(BufReader::new(fs::File::open(records_dir.join("manifest.json"))?))?;
    let mut names: Vec<String> = fs::read_dir(records_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".jsonl"))
        .collect();
    names.sort();
    let mut records = Vec::new();
    for name in names {
        let Some((agent, game, trial)) = parse_record_file_name(&name) else {
            continue;
        };
        let f = BufReader::new(fs::File::open(records_dir.join(&name))?);
        let mut rec = TrialRecord::read_jsonl(&agent, &game, f)?;
        rec.trial = trial;
        records.push(rec);
    }
    let out = records_dir
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    write_reports(&out, &manifest, &records)?;
    Ok(out)
}
