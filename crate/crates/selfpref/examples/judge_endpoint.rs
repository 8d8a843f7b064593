//! Judging against a live OpenAI-compatible endpoint.
//!
//! Runs the single-rubric (SR) paradigm over the bundled fixture with one
//! judge, appending verdicts to a resumable log, then scores the judge
//! against the programmatic-verifier reference.
//!
//! Configuration comes from the environment:
//!
//! ```text
//! SELFPREF_BASE_URL=https://api.example.com   # required
//! SELFPREF_MODEL=some-model-name              # required
//! SELFPREF_AUTH_ENV=OPENAI_API_KEY            # optional: env var holding the token
//! ```
//!
//! Run: cargo run -p selfpref --example judge_endpoint

use std::collections::BTreeSet;
use std::path::PathBuf;

use selfpref::judge::client::{ChatClient, EndpointConfig};
use selfpref::judge::prompt::TemplateFlavor;
use selfpref::judge::runner::{run_judging, ParadigmPlan, RetryPolicy, SamplingConfig};
use selfpref::metrics::mra;
use selfpref::model::{ModelId, Paradigm, RubricVerdict};
use selfpref::store::{
    build_reference_from_verifiers, load_dataset, load_outputs, read_verdicts, VerdictStore,
};

fn main() -> selfpref::Result<()> {
    let Ok(base_url) = std::env::var("SELFPREF_BASE_URL") else {
        eprintln!("SELFPREF_BASE_URL is not set; nothing to call.");
        eprintln!("export SELFPREF_BASE_URL, SELFPREF_MODEL, and optionally SELFPREF_AUTH_ENV.");
        return Ok(());
    };
    let model = std::env::var("SELFPREF_MODEL")
        .map_err(|_| selfpref::Error::Config("SELFPREF_MODEL is not set".into()))?;
    let auth_env = std::env::var("SELFPREF_AUTH_ENV").ok();

    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_ifeval");
    let dataset = load_dataset(&fixtures.join("dataset.jsonl"))?;
    let outputs = load_outputs(&fixtures.join("outputs.jsonl"), Some(&dataset))?;
    let reference = build_reference_from_verifiers(&dataset, &outputs)?;

    let judge = ModelId::new("live-judge")?;
    let endpoint = EndpointConfig {
        base_url,
        models: [(judge.clone(), model)].into_iter().collect(),
        auth_env,
        timeout_secs: 120,
    };
    let client = ChatClient::new(&endpoint)?;
    let plan = ParadigmPlan {
        paradigm: Paradigm::Sr,
        flavor: TemplateFlavor::IfEval,
        judges: vec![judge.clone()],
        generators: vec![
            ModelId::new("nimbus-7b")?,
            ModelId::new("nimbus-1b")?,
            ModelId::new("cirrus-8b")?,
        ],
        sampling: SamplingConfig::default(),
        retry: RetryPolicy::default(),
        concurrency: 4,
    };

    let log_path = PathBuf::from("live_verdicts.jsonl");
    let mut store = VerdictStore::open_append(&log_path)?;
    println!("dispatching SR units (rerunning resumes from {})...", log_path.display());
    let summary = run_judging(&plan, &dataset, &outputs, &client, &mut store, false)?;
    println!(
        "planned {}, skipped {}, done {}, failed {}",
        summary.planned, summary.skipped, summary.done, summary.failed
    );

    let log = read_verdicts(&log_path)?;
    let verdicts: Vec<RubricVerdict> = log.rubric_verdicts().cloned().collect();
    let generators: BTreeSet<ModelId> = plan.generators.iter().cloned().collect();
    let accuracy = mra(&judge, &verdicts, &reference, &generators);
    match accuracy.value() {
        Some(value) => println!(
            "MRA against the verifier reference: {value:.4} ({} of {} verdicts)",
            accuracy.numerator, accuracy.denominator
        ),
        None => println!("MRA undefined: no verdict/reference pairs"),
    }
    Ok(())
}
