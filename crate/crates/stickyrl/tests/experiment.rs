use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stickyrl::agent::EpisodeOutcome;
use stickyrl::eval::TrialRecord;
use stickyrl::experiment::{
    default_milestones, emit_curves, run_experiment, trial_seed, ExperimentConfig, Purpose, RunError, MILESTONE_HEADER,
    SUMMARY_HEADER, WELCH_HEADER,
};
use stickyrl::wrappers::WrapperSpec;

const SMALL: &str = r#"{
  "agents": [{"type": "brute"}, {"type": "sarsa_lambda"}],
  "games": ["chain_walk:1:1", "crossing:1:1"],
  "frame_budget": 3000,
  "trials_per_cell": 3,
  "base_seed": 7,
  "max_episode_frames": 400
}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stickyrl"));
    c.env_remove("STICKYRL_OUT");
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn run_cli(config: &Path, out: &Path) -> Output {
    bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--jobs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap()
}

/// Every file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn with_suffix<'a>(t: &'a BTreeMap<String, Vec<u8>>, suffix: &str) -> Vec<&'a String> {
    t.keys().filter(|k| k.ends_with(suffix)).collect()
}

#[test]
fn minimal_config_gets_defaults() {
    let cfg = ExperimentConfig::parse(
        r#"{"agents":[{"type":"dqn_mini"}],"games":["key_door:1:1"],"frame_budget":1000,"trials_per_cell":1,"base_seed":0}"#,
    )
    .unwrap();
    assert_eq!(cfg.k, 100);
    assert_eq!(cfg.max_episode_frames, 18_000);
    assert_eq!(cfg.milestones(), vec![50, 250, 500, 1000]);
    assert_eq!(cfg.purpose, Purpose::Search);
    assert!(!cfg.terminate_on_life_loss);
    assert_eq!(
        cfg.stochasticity.settings(),
        vec![(
            "default".to_string(),
            vec![WrapperSpec::Sticky {
                varsigma: 0.25,
                frame_skip: 5
            }]
        )]
    );
    assert_eq!(default_milestones(3), vec![1, 2, 3]);
}

#[test]
fn named_settings_parse() {
    let cfg = ExperimentConfig::parse(
        r#"{"agents":[{"type":"brute","name":"b","params":{"gamma":0.99}}],"games":["chain_walk:1:1"],
            "stochasticity":{"det":[{"type":"sticky","varsigma":0.0}],"sticky":[{"type":"sticky","varsigma":0.25}]},
            "frame_budget":100,"trials_per_cell":2,"base_seed":1}"#,
    )
    .unwrap();
    let names: Vec<String> = cfg.stochasticity.settings().into_iter().map(|s| s.0).collect();
    assert_eq!(names, ["det", "sticky"]);
    assert_eq!(cfg.agents[0].name(), "b");
}

#[test]
fn bad_configs_are_rejected() {
    let base = |extra: &str| {
        format!(
            r#"{{"agents":[{{"type":"brute"}}],"games":["chain_walk:1:1"],"frame_budget":100,"trials_per_cell":1,"base_seed":0{extra}}}"#
        )
    };
    for extra in [
        r#","stochasticity":[{"type":"sticky","varsigma":1.5}]"#,
        r#","stochasticity":[{"type":"sticky","varsigma":-0.1}]"#,
        r#","bogus":1"#,
        r#","k":0"#,
        r#","milestones":[]"#,
        r#","milestones":[200]"#,
        r#","training_games":["chain_walk:1:1"],"test_games":["chain_walk:1:1"]"#,
    ] {
        assert!(ExperimentConfig::parse(&base(extra)).is_err(), "accepted {extra}");
    }
    assert!(ExperimentConfig::parse(&base(r#","milestones":[10,100]"#)).is_ok());
    assert!(ExperimentConfig::parse(
        r#"{"agents":[],"games":["chain_walk:1:1"],"frame_budget":1,"trials_per_cell":1,"base_seed":0}"#
    )
    .is_err());
    assert!(ExperimentConfig::parse(
        r#"{"agents":[{"type":"brute"}],"games":["pong:1:1"],"frame_budget":1,"trials_per_cell":1,"base_seed":0}"#
    )
    .is_err());
}

#[test]
fn trial_seeds_are_stable_and_distinct() {
    let a = trial_seed(7, "brute", "chain_walk:1:1", 0);
    assert_eq!(a, trial_seed(7, "brute", "chain_walk:1:1", 0));
    assert_ne!(a, trial_seed(7, "brute", "chain_walk:1:1", 1));
    assert_ne!(a, trial_seed(8, "brute", "chain_walk:1:1", 0));
    assert_ne!(a, trial_seed(7, "sarsa_lambda", "chain_walk:1:1", 0));
}

#[test]
fn cli_argument_errors_exit_one() {
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(
        bin()
            .args(["run", "/nonexistent/config.json"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn validate_reports_trial_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = bin().args(["validate", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok: 12 trials");

    let bad = write_config(dir.path(), &SMALL.replace("\"frame_budget\"", "\"frame_budgets\""));
    let out = bin().args(["validate", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn run_writes_artifacts_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let first = dir.path().join("a");
    let out = run_cli(&cfg, &first);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let t = tree(&first);
    assert_eq!(
        with_suffix(&t, ".jsonl")
            .iter()
            .filter(|k| k.contains("records"))
            .count(),
        12
    );
    assert_eq!(with_suffix(&t, "milestones.csv").len(), 1);
    assert_eq!(with_suffix(&t, ".svg").len(), 4);
    assert!(t.contains_key("default/records/manifest.json"));
    assert!(t.contains_key("settings.json"));
    assert!(t.contains_key("run_ledger.jsonl"));

    let milestones = String::from_utf8(t["default/milestones.csv"].clone()).unwrap();
    let mut lines = milestones.lines();
    assert_eq!(lines.next().unwrap(), MILESTONE_HEADER);
    // 2 games × 2 agents × 4 milestones
    assert_eq!(lines.count(), 16);
    assert!(String::from_utf8_lossy(&t["default/summary.csv"]).starts_with(SUMMARY_HEADER));
    assert!(String::from_utf8_lossy(&t["default/welch.csv"]).starts_with(WELCH_HEADER));
    for (name, bytes) in &t {
        if name.ends_with(".jsonl") && name.contains("records") {
            let rec = TrialRecord::read_jsonl("a", "g", bytes.as_slice()).unwrap();
            assert!(rec.frames_consistent(), "{name}");
            assert!(rec.total_frames() >= 3000, "{name}");
        }
    }

    // same config, fresh directory and a different worker count
    let second = dir.path().join("b");
    let out = bin()
        .args([
            "run",
            cfg.to_str().unwrap(),
            "--jobs",
            "1",
            "--out",
            second.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(t, tree(&second));

    // rerunning into the same directory leaves it byte-identical
    assert_eq!(run_cli(&cfg, &first).status.code(), Some(0));
    assert_eq!(t, tree(&first));

    let reseeded = write_config(dir.path(), &SMALL.replace("\"base_seed\": 7", "\"base_seed\": 8"));
    let third = dir.path().join("c");
    assert_eq!(run_cli(&reseeded, &third).status.code(), Some(0));
    let t3 = tree(&third);
    assert_eq!(t.keys().collect::<Vec<_>>(), t3.keys().collect::<Vec<_>>());
    let differing = with_suffix(&t, ".jsonl")
        .into_iter()
        .filter(|k| t[*k] != t3[*k])
        .count();
    assert!(differing > 0);
    for csv in ["default/milestones.csv", "default/summary.csv", "default/welch.csv"] {
        let head = |b: &[u8]| String::from_utf8_lossy(b).lines().next().unwrap().to_string();
        assert_eq!(head(&t[csv]), head(&t3[csv]));
    }
}

#[test]
fn report_rederives_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    assert_eq!(run_cli(&cfg, &out_dir).status.code(), Some(0));
    let before = tree(&out_dir);

    let setting = out_dir.join("default");
    for f in ["milestones.csv", "summary.csv", "welch.csv"] {
        fs::remove_file(setting.join(f)).unwrap();
    }
    fs::remove_dir_all(setting.join("curves")).unwrap();
    let out = bin()
        .args(["report", setting.join("records").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let after = tree(&out_dir);
    for key in ["default/milestones.csv", "default/summary.csv", "default/welch.csv"] {
        assert_eq!(before[key], after[key], "{key}");
    }
    assert_eq!(with_suffix(&after, ".svg").len(), 4);

    let empty = dir.path().join("nothing");
    fs::create_dir(&empty).unwrap();
    assert_eq!(
        bin()
            .args(["report", empty.to_str().unwrap()])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn failed_trials_exit_two() {
    // no-op draws far past the frame cap end every reset early
    let text = r#"{
      "agents": [{"type": "sarsa_lambda"}],
      "games": ["crossing:1:1"],
      "stochasticity": [{"type": "initial_noops", "k_max": 1000000}, {"type": "sticky", "varsigma": 0.0}],
      "frame_budget": 2000,
      "trials_per_cell": 1,
      "base_seed": 3,
      "max_episode_frames": 400
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    let out_dir = dir.path().join("out");
    let out = run_cli(&cfg, &out_dir);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("default/milestones.csv").exists());
}

#[test]
fn final_run_refused_after_search_on_test_games() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("ledger.jsonl");
    let search: ExperimentConfig = ExperimentConfig::parse(&format!(
        r#"{{"agents":[{{"type":"brute"}}],"games":["chain_walk:1:1"],"frame_budget":200,"trials_per_cell":1,"base_seed":0,
            "max_episode_frames":400,"ledger":"{}"}}"#,
        ledger.display()
    ))
    .unwrap();
    run_experiment(&search, 1, &dir.path().join("search")).unwrap();

    let final_text = format!(
        r#"{{"agents":[{{"type":"brute"}}],"games":["chain_walk:1:1","crossing:1:1"],"frame_budget":200,"trials_per_cell":1,
            "base_seed":0,"max_episode_frames":400,"purpose":"final","training_games":["crossing:1:1"],
            "test_games":["chain_walk:1:1"],"ledger":"{}"}}"#,
        ledger.display()
    );
    let fin = ExperimentConfig::parse(&final_text).unwrap();
    match run_experiment(&fin, 1, &dir.path().join("final")) {
        Err(e @ RunError::TestGamesTouched(_)) => assert_eq!(e.exit_code(), 1),
        other => panic!("expected refusal, got {other:?}"),
    }
    assert!(!dir.path().join("final").exists());
    let cfg_path = write_config(dir.path(), &final_text);
    assert_eq!(run_cli(&cfg_path, &dir.path().join("final")).status.code(), Some(1));

    // untouched test games are fine
    let clean = ExperimentConfig::parse(&final_text.replace(
        &ledger.display().to_string(),
        &dir.path().join("other.jsonl").display().to_string(),
    ))
    .unwrap();
    assert_eq!(
        run_experiment(&clean, 1, &dir.path().join("clean"))
            .unwrap()
            .exit_code(),
        0
    );
}

#[test]
fn curve_svg_is_well_formed() {
    let mk = |trial, score| {
        let mut r = TrialRecord::new("agent", "game", trial, 0);
        for _ in 0..20 {
            r.push(EpisodeOutcome {
                score,
                decisions: 10,
                frames: 10,
            });
        }
        r
    };
    let svg = emit_curves(&[mk(0, 0), mk(1, 10)], 5, "a <b> & c");
    assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("a &lt;b&gt; &amp; c"));
    assert_eq!(svg.matches("<polyline").count(), 3);
    let mean = svg.lines().find(|l| l.contains("#d62728")).unwrap();
    let pts = mean.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
    let ys: Vec<f64> = pts
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let grey: Vec<&str> = svg.lines().filter(|l| l.contains("#999999")).collect();
    let y_of = |l: &str| -> f64 {
        l.split("points=\"")
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .split(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    let mid = (y_of(grey[0]) + y_of(grey[1])) / 2.0;
    assert!(ys.iter().all(|&y| (y - mid).abs() < 0.01), "mean line not at 5");
    assert_eq!(svg.matches("<text").count(), svg.matches("</text>").count());
    assert_eq!(svg.matches("<svg").count(), 1);
    for tag in ["<line", "<polyline", "<rect"] {
        for l in svg.lines().filter(|l| l.starts_with(tag)) {
            assert!(l.ends_with("/>"), "{l}");
        }
    }
}
