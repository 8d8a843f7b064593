//! Scheduling and execution of judging runs.
//!
//! A plan expands into a deterministic list of units: SR is one unit per
//! (judge, generator, instance, rubric); AR and DA are one per (judge,
//! generator, instance); PWC enumerates unordered generator pairs and
//! schedules both presentation orders. Units already present in the log
//! (including units that exhausted their retries) are skipped, so an
//! interrupted run resumes by dispatching exactly the missing units.
//!
//! Workers run concurrently up to the plan's limit; the verdict store is the
//! single serialization point.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::judge::client::{ChatClient, Sampling};
use crate::judge::parse;
use crate::judge::prompt::{render_prompt, template_id, prompt_hash, PromptInput, TemplateFlavor};
use crate::model::{
    BenchmarkInstance, GeneratorOutput, InstanceScore, ModelId, PairwiseRun, Paradigm,
    RubricVerdict, Score, ScoreSource, Scorer,
};
use crate::store::{FailedUnit, LogEntry, LogRecord, RecordMeta, UnitKey, VerdictStore};

/// Retry policy for one unit: transport failures and unparseable responses
/// are both retried, with exponential backoff plus jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

/// A full judging plan for one paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmPlan {
    pub paradigm: Paradigm,
    #[serde(default)]
    pub flavor: TemplateFlavor,
    pub judges: Vec<ModelId>,
    pub generators: Vec<ModelId>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_concurrency() -> usize {
    4
}

/// Serde-friendly sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_max_tokens() -> u32 {
    1024
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            temperature: 0.0,
            max_tokens: default_max_tokens(),
        }
    }
}

impl From<SamplingConfig> for Sampling {
    fn from(c: SamplingConfig) -> Sampling {
        Sampling {
            temperature: c.temperature,
            max_tokens: c.max_tokens,
        }
    }
}

impl ParadigmPlan {
    pub fn validate(&self) -> Result<()> {
        if self.judges.is_empty() {
            return Err(Error::Config("plan has no judges".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::Config("plan has no generators".into()));
        }
        if self.paradigm == Paradigm::Pwc && self.generators.len() < 2 {
            return Err(Error::Config("PWC plan needs at least two generators".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::Config("plan concurrency must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(Error::Config("retry policy needs at least one attempt".into()));
        }
        Ok(())
    }
}

/// One schedulable piece of work.
#[derive(Debug, Clone)]
pub struct UnitJob {
    pub key: UnitKey,
    pub judge: ModelId,
    pub instance_id: String,
    /// Rubric index for SR units.
    pub rubric_index: Option<usize>,
    /// Generator whose completion is judged (SR/AR/DA), or the pair in
    /// presentation order (PWC).
    pub subject: UnitSubject,
}

#[derive(Debug, Clone)]
pub enum UnitSubject {
    Single(ModelId),
    OrderedPair(ModelId, ModelId),
}

/// Expands a plan over a dataset into the deterministic unit list.
pub fn plan_units(
    plan: &ParadigmPlan,
    dataset: &[BenchmarkInstance],
    outputs: &[GeneratorOutput],
) -> Result<Vec<UnitJob>> {
    plan.validate()?;
    let output_keys: BTreeMap<(&str, &ModelId), &GeneratorOutput> = outputs
        .iter()
        .map(|o| ((o.instance_id.as_str(), &o.generator), o))
        .collect();
    for generator in &plan.generators {
        for instance in dataset {
            if !output_keys.contains_key(&(instance.instance_id.as_str(), generator)) {
                return Err(Error::Coverage(format!(
                    "no output for generator '{generator}' on instance '{}'",
                    instance.instance_id
                )));
            }
        }
    }

    let mut units = Vec::new();
    for judge in &plan.judges {
        for instance in dataset {
            match plan.paradigm {
                Paradigm::Sr => {
                    for generator in &plan.generators {
                        for (idx, rubric) in instance.rubrics.iter().enumerate() {
                            units.push(UnitJob {
                                key: UnitKey::Rubric {
                                    judge: judge.clone(),
                                    generator: generator.clone(),
                                    instance_id: instance.instance_id.clone(),
                                    rubric_id: rubric.rubric_id.clone(),
                                    paradigm: Paradigm::Sr,
                                },
                                judge: judge.clone(),
                                instance_id: instance.instance_id.clone(),
                                rubric_index: Some(idx),
                                subject: UnitSubject::Single(generator.clone()),
                            });
                        }
                    }
                }
                Paradigm::Ar | Paradigm::Da => {
                    for generator in &plan.generators {
                        units.push(UnitJob {
                            key: UnitKey::Instance {
                                judge: judge.clone(),
                                generator: generator.clone(),
                                instance_id: instance.instance_id.clone(),
                                paradigm: plan.paradigm,
                            },
                            judge: judge.clone(),
                            instance_id: instance.instance_id.clone(),
                            rubric_index: None,
                            subject: UnitSubject::Single(generator.clone()),
                        });
                    }
                }
                Paradigm::Pwc => {
                    for (i, first) in plan.generators.iter().enumerate() {
                        for second in plan.generators.iter().skip(i + 1) {
                            for (a, b) in [(first, second), (second, first)] {
                                units.push(UnitJob {
                                    key: UnitKey::Pairwise {
                                        judge: judge.clone(),
                                        generator_first: a.clone(),
                                        generator_second: b.clone(),
                                        instance_id: instance.instance_id.clone(),
                                    },
                                    judge: judge.clone(),
                                    instance_id: instance.instance_id.clone(),
                                    rubric_index: None,
                                    subject: UnitSubject::OrderedPair(a.clone(), b.clone()),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(units)
}

/// Renders the prompt for one unit.
pub fn render_unit_prompt(
    plan: &ParadigmPlan,
    unit: &UnitJob,
    dataset: &[BenchmarkInstance],
    outputs: &[GeneratorOutput],
) -> Result<String> {
    let instance = dataset
        .iter()
        .find(|i| i.instance_id == unit.instance_id)
        .ok_or_else(|| Error::CrossRef(format!("unknown instance '{}'", unit.instance_id)))?;
    let completion_of = |generator: &ModelId| -> Result<&str> {
        outputs
            .iter()
            .find(|o| o.instance_id == unit.instance_id && o.generator == *generator)
            .map(|o| o.completion.as_str())
            .ok_or_else(|| {
                Error::Coverage(format!(
                    "no output for generator '{generator}' on instance '{}'",
                    unit.instance_id
                ))
            })
    };
    match &unit.subject {
        UnitSubject::Single(generator) => {
            let completion = completion_of(generator)?;
            let rubrics: Vec<&crate::model::Rubric> = match unit.rubric_index {
                Some(idx) => vec![&instance.rubrics[idx]],
                None => instance.rubrics.iter().collect(),
            };
            render_prompt(
                plan.paradigm,
                plan.flavor,
                instance,
                PromptInput::Single { completion },
                &rubrics,
            )
        }
        UnitSubject::OrderedPair(first, second) => {
            let rubrics: Vec<&crate::model::Rubric> = instance.rubrics.iter().collect();
            render_prompt(
                plan.paradigm,
                plan.flavor,
                instance,
                PromptInput::Pair {
                    first: completion_of(first)?,
                    second: completion_of(second)?,
                },
                &rubrics,
            )
        }
    }
}

/// Outcome summary of a judging run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub planned: usize,
    pub skipped: usize,
    pub done: usize,
    pub failed: usize,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Parses one raw response into the unit's log records.
fn records_for_unit(
    plan: &ParadigmPlan,
    unit: &UnitJob,
    instance: &BenchmarkInstance,
    raw: &str,
    rendered_hash: &str,
    deterministic: bool,
) -> Result<Vec<LogRecord>> {
    let meta = RecordMeta {
        template: Some(template_id(plan.paradigm, plan.flavor).to_string()),
        prompt_hash: Some(rendered_hash.to_string()),
        timestamp: if deterministic { None } else { Some(now_secs()) },
        raw_response: Some(raw.to_string()),
    };
    let mut records = Vec::new();
    match (&unit.subject, plan.paradigm) {
        (UnitSubject::Single(generator), Paradigm::Sr) => {
            let met = parse::parse_sr_response(raw)?;
            let idx = unit.rubric_index.expect("SR unit carries a rubric index");
            records.push(LogRecord {
                entry: LogEntry::Rubric(RubricVerdict {
                    judge: unit.judge.clone(),
                    generator: generator.clone(),
                    instance_id: unit.instance_id.clone(),
                    rubric_id: instance.rubrics[idx].rubric_id.clone(),
                    met,
                    paradigm: Paradigm::Sr,
                    raw_ref: Some(rendered_hash.to_string()),
                }),
                meta,
            });
        }
        (UnitSubject::Single(generator), Paradigm::Ar) => {
            let mets = parse::parse_ar_response(raw, instance.rubrics.len())?;
            for (rubric, met) in instance.rubrics.iter().zip(mets) {
                records.push(LogRecord {
                    entry: LogEntry::Rubric(RubricVerdict {
                        judge: unit.judge.clone(),
                        generator: generator.clone(),
                        instance_id: unit.instance_id.clone(),
                        rubric_id: rubric.rubric_id.clone(),
                        met,
                        paradigm: Paradigm::Ar,
                        raw_ref: Some(rendered_hash.to_string()),
                    }),
                    meta: meta.clone(),
                });
            }
        }
        (UnitSubject::Single(generator), Paradigm::Da) => {
            let fraction = parse::parse_da_response(raw, instance.rubrics.len())?;
            records.push(LogRecord {
                entry: LogEntry::Da(InstanceScore {
                    scorer: Scorer::Judge(unit.judge.clone()),
                    generator: generator.clone(),
                    instance_id: unit.instance_id.clone(),
                    score: Score::Fraction(fraction),
                    source: ScoreSource::Da,
                }),
                meta,
            });
        }
        (UnitSubject::OrderedPair(first, second), Paradigm::Pwc) => {
            let outcome = parse::parse_pwc_response(raw)?;
            records.push(LogRecord {
                entry: LogEntry::Pwc(PairwiseRun {
                    judge: unit.judge.clone(),
                    generator_first: first.clone(),
                    generator_second: second.clone(),
                    instance_id: unit.instance_id.clone(),
                    outcome,
                }),
                meta,
            });
        }
        (subject, paradigm) => {
            return Err(Error::Config(format!(
                "unit subject {subject:?} does not fit paradigm {paradigm}"
            )))
        }
    }
    Ok(records)
}

/// Runs all missing units of a plan against the endpoint, appending records
/// through the store. Failed units are retried per policy, then logged with
/// an error flag; the run continues. Errors out only when configuration is
/// broken or every dispatched unit failed.
pub fn run_judging(
    plan: &ParadigmPlan,
    dataset: &[BenchmarkInstance],
    outputs: &[GeneratorOutput],
    client: &ChatClient,
    store: &mut VerdictStore,
    deterministic: bool,
) -> Result<RunSummary> {
    for judge in &plan.judges {
        client.model_name(judge)?;
    }
    let units = plan_units(plan, dataset, outputs)?;
    let planned = units.len();
    let pending: Vec<UnitJob> = units
        .into_iter()
        .filter(|u| !store.contains_unit(&u.key))
        .collect();
    let skipped = planned - pending.len();

    let instances_by_id: BTreeMap<&str, &BenchmarkInstance> =
        dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();

    let queue = Mutex::new(pending.into_iter());
    let sink: Mutex<&mut VerdictStore> = Mutex::new(store);
    let done = Mutex::new(0usize);
    let failed = Mutex::new(0usize);
    let sampling: Sampling = plan.sampling.into();

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for _ in 0..plan.concurrency.max(1) {
            handles.push(scope.spawn(|| -> Result<()> {
                loop {
                    let unit = {
                        let mut q = queue.lock().expect("queue lock");
                        q.next()
                    };
                    let Some(unit) = unit else { return Ok(()) };
                    let instance = instances_by_id[unit.instance_id.as_str()];
                    let rendered = render_unit_prompt(plan, &unit, dataset, outputs)?;
                    let hash = prompt_hash(&rendered);
                    let model = client.model_name(&unit.judge)?;

                    let mut last_error = String::new();
                    let mut outcome = None;
                    for attempt in 0..plan.retry.max_attempts {
                        if attempt > 0 {
                            let jitter = rand::rng().random_range(0..=plan.retry.backoff_ms.max(1));
                            let pause = plan.retry.backoff_ms * (1 << (attempt - 1)) + jitter;
                            std::thread::sleep(std::time::Duration::from_millis(pause));
                        }
                        match client.complete(model, &rendered, sampling).and_then(|raw| {
                            records_for_unit(plan, &unit, instance, &raw, &hash, deterministic)
                        }) {
                            Ok(records) => {
                                outcome = Some(records);
                                break;
                            }
                            Err(e) => last_error = e.to_string(),
                        }
                    }
                    match outcome {
                        Some(records) => {
                            let mut sink = sink.lock().expect("store lock");
                            for record in records {
                                sink.append(record)?;
                            }
                            *done.lock().expect("counter lock") += 1;
                        }
                        None => {
                            let mut sink = sink.lock().expect("store lock");
                            sink.append(LogRecord {
                                entry: LogEntry::Failed(FailedUnit {
                                    unit: unit.key.clone(),
                                    error: last_error,
                                }),
                                meta: RecordMeta {
                                    template: Some(
                                        template_id(plan.paradigm, plan.flavor).to_string(),
                                    ),
                                    prompt_hash: Some(hash.clone()),
                                    timestamp: if deterministic { None } else { Some(now_secs()) },
                                    raw_response: None,
                                },
                            })?;
                            *failed.lock().expect("counter lock") += 1;
                        }
                    }
                }
            }));
        }
        for handle in handles {
            handle.join().expect("worker panicked")?;
        }
        Ok(())
    })?;

    let summary = RunSummary {
        planned,
        skipped,
        done: done.into_inner().expect("counter lock"),
        failed: failed.into_inner().expect("counter lock"),
    };
    if summary.done == 0 && summary.failed > 0 {
        return Err(Error::Transport(format!(
            "all {} dispatched units failed",
            summary.failed
        )));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Role, Rubric, Turn};

    fn mid(s: &str) -> ModelId {
        ModelId::new(s).unwrap()
    }

    fn dataset(n_instances: usize, n_rubrics: usize) -> Vec<BenchmarkInstance> {
        (0..n_instances)
            .map(|i| BenchmarkInstance {
                instance_id: format!("i{i}"),
                conversation: vec![Turn {
                    role: Role::User,
                    content: format!("question {i}"),
                }],
                rubrics: (0..n_rubrics)
                    .map(|k| Rubric {
                        rubric_id: format!("r{k}"),
                        text: format!("criterion {k}"),
                        weight: 1.0,
                        axis: None,
                        theme: None,
                        verifier: None,
                    })
                    .collect(),
            })
            .collect()
    }

    fn outputs(dataset: &[BenchmarkInstance], generators: &[ModelId]) -> Vec<GeneratorOutput> {
        let mut out = Vec::new();
        for instance in dataset {
            for generator in generators {
                out.push(GeneratorOutput {
                    instance_id: instance.instance_id.clone(),
                    generator: generator.clone(),
                    completion: format!("{generator} answer for {}", instance.instance_id),
                });
            }
        }
        out
    }

    fn plan(paradigm: Paradigm, judges: &[&str], generators: &[&str]) -> ParadigmPlan {
        ParadigmPlan {
            paradigm,
            flavor: TemplateFlavor::IfEval,
            judges: judges.iter().map(|j| mid(j)).collect(),
            generators: generators.iter().map(|g| mid(g)).collect(),
            sampling: SamplingConfig::default(),
            retry: RetryPolicy::default(),
            concurrency: 2,
        }
    }

    #[test]
    fn sr_unit_count_is_cross_product() {
        let data = dataset(20, 2);
        let gens = [mid("g1"), mid("g2"), mid("g3")];
        let outs = outputs(&data, &gens);
        let units = plan_units(&plan(Paradigm::Sr, &["j1"], &["g1", "g2", "g3"]), &data, &outs).unwrap();
        assert_eq!(units.len(), 20 * 2 * 3);
    }

    #[test]
    fn pwc_schedules_both_orders() {
        let data = dataset(20, 1);
        let gens = [mid("g1"), mid("g2"), mid("g3")];
        let outs = outputs(&data, &gens);
        let units = plan_units(&plan(Paradigm::Pwc, &["j1"], &["g1", "g2", "g3"]), &data, &outs).unwrap();
        // 3 unordered pairs x 20 instances x 2 orders
        assert_eq!(units.len(), 120);
        let reversed = units
            .iter()
            .filter(|u| matches!(&u.subject, UnitSubject::OrderedPair(a, b) if a > b))
            .count();
        assert_eq!(reversed, 60);
    }

    #[test]
    fn missing_output_is_coverage_error() {
        let data = dataset(2, 1);
        let gens = [mid("g1")];
        let outs = outputs(&data, &gens);
        let err = plan_units(&plan(Paradigm::Sr, &["j1"], &["g1", "g2"]), &data, &outs).unwrap_err();
        assert!(matches!(err, Error::Coverage(_)));
    }
}
