//! Command-level behavior: dry runs, idempotent outputs, the exit-code
//! contract, and the fixture-driven verify -> metrics flow.

mod common;

use std::path::Path;
use std::process::Command;

use common::fixture_dir;
use selfpref::commands::{cmd_judge, cmd_metrics, cmd_verify, CliOverrides};
use selfpref::config::RunConfig;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_selfpref")
}

fn write_config(dir: &Path, value: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn fixture_config(dir: &Path, out: &Path) -> serde_json::Value {
    let fixtures = fixture_dir().join("mini_ifeval");
    serde_json::json!({
        "schema": "config/v1",
        "paths": {
            "dataset": fixtures.join("dataset.jsonl"),
            "outputs": fixtures.join("outputs.jsonl"),
            "registry": fixtures.join("registry.json"),
            "reference": dir.join("reference.jsonl"),
            "logs": [dir.join("verdicts.jsonl")],
            "out_dir": out,
        },
        "judges": ["judge-a"],
        "generators": ["nimbus-7b", "nimbus-1b", "cirrus-8b"],
        "plan": {"paradigm": "SR"},
        "deterministic": true,
    })
}

#[test]
fn dry_run_renders_every_planned_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config_path = write_config(dir.path(), fixture_config(dir.path(), &out));
    let (config, hash) = RunConfig::load(&config_path).unwrap();
    let overrides = CliOverrides {
        dry_run: true,
        ..Default::default()
    };
    let summary = cmd_judge(&config, &hash, &overrides).unwrap();
    // 40 rubrics x 3 generators x 1 judge.
    assert_eq!(summary.planned, 120);
    let prompts: Vec<_> = std::fs::read_dir(out.join("prompts")).unwrap().collect();
    assert_eq!(prompts.len(), 120);
}

#[test]
fn verify_is_idempotent_and_feeds_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config_path = write_config(dir.path(), fixture_config(dir.path(), &out));
    let (config, hash) = RunConfig::load(&config_path).unwrap();
    let overrides = CliOverrides::default();

    let reference_path = cmd_verify(&config, &hash, &overrides).unwrap();
    let first = std::fs::read(&reference_path).unwrap();
    cmd_verify(&config, &hash, &overrides).unwrap();
    let second = std::fs::read(&reference_path).unwrap();
    assert_eq!(first, second, "verify rerun must be byte-identical");

    // A perfect judge log: copy the reference verdicts as SR verdicts.
    let reference = selfpref::store::load_reference(&reference_path).unwrap();
    let mut log = selfpref::store::VerdictLog::new();
    log.append_all(
        reference
            .rubric_refs
            .iter()
            .map(|((generator, instance_id, rubric_id), met)| {
                selfpref::store::LogRecord::new(selfpref::store::LogEntry::Rubric(
                    selfpref::model::RubricVerdict {
                        judge: common::mid("judge-a"),
                        generator: generator.clone(),
                        instance_id: instance_id.clone(),
                        rubric_id: rubric_id.clone(),
                        met: *met,
                        paradigm: selfpref::model::Paradigm::Sr,
                        raw_ref: None,
                    },
                ))
            })
            .collect(),
    )
    .unwrap();
    selfpref::store::write_verdicts(&dir.path().join("verdicts.jsonl"), &log).unwrap();

    // The registry lacks judge-a; point the roster at fixture models only.
    let mut config = config;
    config.judges = vec![common::mid("nimbus-7b")];
    // Rewrite the log under the roster judge.
    let mut log = selfpref::store::VerdictLog::new();
    log.append_all(
        reference
            .rubric_refs
            .iter()
            .map(|((generator, instance_id, rubric_id), met)| {
                selfpref::store::LogRecord::new(selfpref::store::LogEntry::Rubric(
                    selfpref::model::RubricVerdict {
                        judge: common::mid("nimbus-7b"),
                        generator: generator.clone(),
                        instance_id: instance_id.clone(),
                        rubric_id: rubric_id.clone(),
                        met: *met,
                        paradigm: selfpref::model::Paradigm::Sr,
                        raw_ref: None,
                    },
                ))
            })
            .collect(),
    )
    .unwrap();
    selfpref::store::write_verdicts(&dir.path().join("verdicts.jsonl"), &log).unwrap();

    let artifacts = cmd_metrics(&config, &hash, &overrides).unwrap();
    assert!(artifacts.out_dir.join("metrics_rubric.csv").exists());

    // Perfect judge: MRA 1, HSPP undefined, shown as `undef` in the report.
    let csv = std::fs::read_to_string(artifacts.out_dir.join("metrics_rubric.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("SR,nimbus-7b,1"), "row: {row}");
    assert!(row.contains("undef"), "perfect judge must show undef HSPP: {row}");

    // CSV and Markdown carry the same numbers (markdown at 4 decimals).
    let md = std::fs::read_to_string(artifacts.out_dir.join("metrics.md")).unwrap();
    assert!(md.contains("| 1.0000 |"));
    assert!(md.contains("undef"));
}

#[test]
fn deterministic_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = serde_json::json!({
        "n_instances": 60,
        "rubrics_per_instance": 3,
        "fail_prob": 0.5,
        "p_fp": 0.1,
        "p_fn": 0.1,
        "beta_self": 1.3,
        "beta_fam": 1.0,
        "family_sizes": [2, 2],
        "n_judges": 2,
        "seed": 5
    });
    let out = dir.path().join("out");
    let config_path = write_config(
        dir.path(),
        serde_json::json!({
            "schema": "config/v1",
            "paths": {
                "dataset": out.join("sim_dataset.jsonl"),
                "registry": out.join("sim_registry.json"),
                "reference": out.join("sim_reference.jsonl"),
                "logs": [out.join("sim_verdicts.jsonl")],
                "out_dir": out,
            },
            "deterministic": true,
            "thresholds": [0.5, 1.0],
            "slices": ["polarity"],
            "scenario": scenario,
        }),
    );
    let (config, hash) = RunConfig::load(&config_path).unwrap();
    let overrides = CliOverrides::default();
    let run = || {
        selfpref::commands::cmd_simulate(&config, &hash, &overrides).unwrap();
        cmd_metrics(&config, &hash, &overrides).unwrap();
        selfpref::commands::cmd_analyze(&config, &hash, &overrides).unwrap();
    };
    run();
    let snapshot: Vec<(std::ffi::OsString, Vec<u8>)> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let e = e.unwrap();
            if e.path().is_dir() {
                None
            } else {
                Some((e.file_name(), std::fs::read(e.path()).unwrap()))
            }
        })
        .collect();
    assert!(snapshot.len() >= 10);
    run();
    for (name, before) in snapshot {
        let after = std::fs::read(out.join(&name)).unwrap();
        assert_eq!(before, after, "{name:?} differs across identical deterministic runs");
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    // Usage error: missing --config.
    let status = Command::new(binary())
        .arg("metrics")
        .status()
        .expect("spawn selfpref");
    assert_eq!(status.code(), Some(1));

    // Usage error: unknown flag (clap).
    let status = Command::new(binary())
        .args(["metrics", "--no-such-flag"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Config error: config file missing.
    let status = Command::new(binary())
        .args(["metrics", "--config", "/nonexistent/config.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Data error: dataset rubrics carry no verifiers, verify exits 2.
    let dir = tempfile::tempdir().unwrap();
    let dataset_path = dir.path().join("dataset.jsonl");
    std::fs::write(
        &dataset_path,
        "{\"schema\":\"dataset/v1\",\"instance_id\":\"i1\",\"conversation\":[{\"role\":\"user\",\"content\":\"q\"}],\"rubrics\":[{\"rubric_id\":\"r1\",\"text\":\"subjective\",\"weight\":1.0}]}\n",
    )
    .unwrap();
    let outputs_path = dir.path().join("outputs.jsonl");
    std::fs::write(
        &outputs_path,
        "{\"schema\":\"outputs/v1\",\"instance_id\":\"i1\",\"generator\":\"m1\",\"completion\":\"x\"}\n",
    )
    .unwrap();
    let config_path = write_config(
        dir.path(),
        serde_json::json!({
            "schema": "config/v1",
            "paths": {
                "dataset": dataset_path,
                "outputs": outputs_path,
                "out_dir": dir.path().join("out"),
            }
        }),
    );
    let status = Command::new(binary())
        .args(["verify", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Transport error: judge against an unreachable endpoint exits 3.
    let fixtures = fixture_dir().join("mini_ifeval");
    let config_path = write_config(
        dir.path(),
        serde_json::json!({
            "schema": "config/v1",
            "paths": {
                "dataset": fixtures.join("dataset.jsonl"),
                "outputs": fixtures.join("outputs.jsonl"),
                "out_dir": dir.path().join("out"),
            },
            "judges": ["judge-a"],
            "generators": ["nimbus-7b"],
            "plan": {"paradigm": "SR", "retry": {"max_attempts": 1, "backoff_ms": 1}, "concurrency": 2},
            "endpoint": {"base_url": "http://127.0.0.1:9", "models": {"judge-a": "m"}, "timeout_secs": 1},
        }),
    );
    let status = Command::new(binary())
        .args(["judge", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // Success: dry run exits 0.
    let status = Command::new(binary())
        .args(["judge", "--dry-run", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
