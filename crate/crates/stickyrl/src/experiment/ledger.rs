use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Purpose;

/// One line of the run ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub config_digest: String,
    pub purpose: Purpose,
    pub games: Vec<String>,
}

pub fn read_ledger(path: &Path) -> io::Result<Vec<LedgerEntry>> {
    match fs::read_to_string(path) {
        Ok(text) => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(io::Error::from))
            .collect(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// Append `entry` unless an identical one is already there, so reruns leave
/// the ledger unchanged.
pub fn record_run(path: &Path, entry: &LedgerEntry) -> io::Result<()> {
    let mut entries = read_ledger(path)?;
    if entries.contains(entry) {
        return Ok(());
    }
    entries.push(entry.clone());
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = String::new();
    for e in &entries {
        text.push_str(&serde_json::to_string(e)?);
        text.push('\n');
    }
    fs::write(path, text)
}

/// Test games already touched by a search run.
pub fn contaminated(entries: &[LedgerEntry], test_games: &[String]) -> Vec<String> {
    let mut hit: Vec<String> = test_games
        .iter()
        .filter(|g| {
            entries
                .iter()
                .any(|e| e.purpose == Purpose::Search && e.games.contains(g))
        })
        .cloned()
        .collect();
    hit.sort();
    hit.dedup();
    hit
}
