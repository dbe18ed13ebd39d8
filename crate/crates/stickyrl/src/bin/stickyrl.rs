use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stickyrl::experiment::{report_from_records, run_experiment, ExperimentConfig};

const OUT_ENV: &str = "STICKYRL_OUT";

#[derive(Parser)]
#[command(
    name = "stickyrl",
    version,
    about = "Run seeded agent/game/stochasticity grids and report on them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a config and write records and reports.
    Run {
        config: PathBuf,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory. Falls back to the config's output_dir, then
        /// $STICKYRL_OUT, then ./out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild CSV and SVG reports from a records directory.
    Report { records_dir: PathBuf },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ExperimentConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                let n = cfg.stochasticity.settings().len()
                    * cfg.agents.len()
                    * cfg.games.len()
                    * cfg.trials_per_cell as usize;
                println!("ok: {n} trials");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Report { records_dir } => match report_from_records(&records_dir) {
            Ok(dir) => {
                println!("reports written to {}", dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, jobs, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let out = out
                .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            match run_experiment(&cfg, jobs, &out) {
                Ok(s) => {
                    println!(
                        "{} trials, {} failed, artifacts in {}",
                        s.trials,
                        s.failed,
                        s.out_dir.display()
                    );
                    if s.failed > 0 {
                        eprintln!("see {}/<setting>/failures.txt", s.out_dir.display());
                    }
                    ExitCode::from(s.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
