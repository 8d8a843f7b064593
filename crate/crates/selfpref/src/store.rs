//! Loading and persistence: datasets, generator outputs, family registries,
//! append-only verdict logs, and reference sets.
//!
//! Every persisted file is line-delimited JSON with an explicit top-level
//! `schema` field. Logs additionally carry the rendered prompt hash per
//! record so paradigm runs stay auditable, and re-reading a log reproduces
//! its records byte-identically.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BenchmarkInstance, FamilyRegistry, Fraction, GeneratorOutput, InstanceScore, ModelId,
    PairwiseRun, Paradigm, RubricVerdict, Score, ScoreMode, Scorer,
};
use crate::verifier::verify_instance;

pub const DATASET_SCHEMA: &str = "dataset/v1";
pub const OUTPUTS_SCHEMA: &str = "outputs/v1";
pub const VERDICTS_SCHEMA: &str = "verdicts/v1";
pub const REFERENCE_SCHEMA: &str = "reference/v1";
pub const REGISTRY_SCHEMA: &str = "registry/v1";

// ---------------------------------------------------------------------------
// Generic JSONL helpers
// ---------------------------------------------------------------------------

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

/// Reads one JSON value per non-empty line, checking the `schema` field.
fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let file = File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e))?;
        match value.get("schema").and_then(|v| v.as_str()) {
            Some(s) if s == schema => {}
            Some(other) => {
                return Err(Error::Version(format!(
                    "{}:{lineno}: expected schema '{schema}', found '{other}'",
                    path.display()
                )))
            }
            None => {
                return Err(Error::Version(format!(
                    "{}:{lineno}: record is missing the 'schema' field",
                    path.display()
                )))
            }
        }
        records.push(serde_json::from_value(value).map_err(|e| parse_err(lineno, e))?);
    }
    Ok(records)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = File::create(path)?;
    for record in records {
        serde_json::to_writer(&mut file, record)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Datasets and outputs
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DatasetLine {
    schema: String,
    #[serde(flatten)]
    instance: BenchmarkInstance,
}

pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkInstance>> {
    let lines: Vec<DatasetLine> = read_jsonl(path, DATASET_SCHEMA)?;
    let mut seen = BTreeSet::new();
    let instances: Vec<BenchmarkInstance> = lines.into_iter().map(|l| l.instance).collect();
    for instance in &instances {
        instance.validate()?;
        if !seen.insert(instance.instance_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate instance id '{}'",
                instance.instance_id
            )));
        }
    }
    Ok(instances)
}

pub fn save_dataset(path: &Path, instances: &[BenchmarkInstance]) -> Result<()> {
    let lines: Vec<DatasetLine> = instances
        .iter()
        .map(|i| DatasetLine {
            schema: DATASET_SCHEMA.into(),
            instance: i.clone(),
        })
        .collect();
    write_jsonl(path, &lines)
}

#[derive(Serialize, Deserialize)]
struct OutputLine {
    schema: String,
    #[serde(flatten)]
    output: GeneratorOutput,
}

/// Loads generator outputs, enforcing (instance, generator) uniqueness and,
/// when a dataset is given, that every output resolves to a known instance.
pub fn load_outputs(
    path: &Path,
    dataset: Option<&[BenchmarkInstance]>,
) -> Result<Vec<GeneratorOutput>> {
    let lines: Vec<OutputLine> = read_jsonl(path, OUTPUTS_SCHEMA)?;
    let outputs: Vec<GeneratorOutput> = lines.into_iter().map(|l| l.output).collect();
    let mut seen = BTreeSet::new();
    for output in &outputs {
        if !seen.insert((output.instance_id.clone(), output.generator.clone())) {
            return Err(Error::Validation(format!(
                "duplicate output for ({}, {})",
                output.instance_id, output.generator
            )));
        }
    }
    if let Some(dataset) = dataset {
        let known: BTreeSet<&str> = dataset.iter().map(|i| i.instance_id.as_str()).collect();
        for output in &outputs {
            if !known.contains(output.instance_id.as_str()) {
                return Err(Error::CrossRef(format!(
                    "output for generator '{}' references unknown instance '{}'",
                    output.generator, output.instance_id
                )));
            }
        }
    }
    Ok(outputs)
}

pub fn save_outputs(path: &Path, outputs: &[GeneratorOutput]) -> Result<()> {
    let lines: Vec<OutputLine> = outputs
        .iter()
        .map(|o| OutputLine {
            schema: OUTPUTS_SCHEMA.into(),
            output: o.clone(),
        })
        .collect();
    write_jsonl(path, &lines)
}

// ---------------------------------------------------------------------------
// Family registry
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    schema: String,
    families: BTreeMap<ModelId, String>,
}

pub fn load_registry(path: &Path) -> Result<FamilyRegistry> {
    let mut text = String::new();
    File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?
        .read_to_string(&mut text)?;
    let file: RegistryFile = serde_json::from_str(&text).map_err(|e| parse_err(1, e))?;
    if file.schema != REGISTRY_SCHEMA {
        return Err(Error::Version(format!(
            "{}: expected schema '{REGISTRY_SCHEMA}', found '{}'",
            path.display(),
            file.schema
        )));
    }
    let mut registry = FamilyRegistry::new();
    for (model, family) in file.families {
        registry.insert(model, family)?;
    }
    Ok(registry)
}

pub fn save_registry(path: &Path, registry: &FamilyRegistry) -> Result<()> {
    let file = RegistryFile {
        schema: REGISTRY_SCHEMA.into(),
        families: registry
            .iter()
            .map(|(m, f)| (m.clone(), f.to_string()))
            .collect(),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = File::create(path)?;
    serde_json::to_writer_pretty(&mut out, &file)?;
    out.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Verdict logs
// ---------------------------------------------------------------------------

/// Identifies one schedulable judging unit. SR units are per rubric; AR and
/// DA units are per instance; PWC units are per ordered presentation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum UnitKey {
    Rubric {
        judge: ModelId,
        generator: ModelId,
        instance_id: String,
        rubric_id: String,
        paradigm: Paradigm,
    },
    Instance {
        judge: ModelId,
        generator: ModelId,
        instance_id: String,
        paradigm: Paradigm,
    },
    Pairwise {
        judge: ModelId,
        generator_first: ModelId,
        generator_second: ModelId,
        instance_id: String,
    },
}

/// A unit that exhausted its retries; kept in the log so resumed runs do not
/// re-dispatch it and so exclusion counts stay auditable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedUnit {
    #[serde(flatten)]
    pub unit: UnitKey,
    pub error: String,
}

/// The payload of one log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEntry {
    Rubric(RubricVerdict),
    Da(InstanceScore),
    Pwc(PairwiseRun),
    Failed(FailedUnit),
}

/// Run metadata attached to each record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    #[serde(flatten)]
    pub entry: LogEntry,
    #[serde(flatten)]
    pub meta: RecordMeta,
}

impl LogRecord {
    pub fn new(entry: LogEntry) -> Self {
        LogRecord {
            entry,
            meta: RecordMeta::default(),
        }
    }

    /// The schedulable unit this record accounts for.
    pub fn unit_key(&self) -> UnitKey {
        match &self.entry {
            LogEntry::Rubric(v) => match v.paradigm {
                Paradigm::Sr => UnitKey::Rubric {
                    judge: v.judge.clone(),
                    generator: v.generator.clone(),
                    instance_id: v.instance_id.clone(),
                    rubric_id: v.rubric_id.clone(),
                    paradigm: v.paradigm,
                },
                // An AR call covers the whole instance.
                _ => UnitKey::Instance {
                    judge: v.judge.clone(),
                    generator: v.generator.clone(),
                    instance_id: v.instance_id.clone(),
                    paradigm: v.paradigm,
                },
            },
            LogEntry::Da(s) => UnitKey::Instance {
                judge: match &s.scorer {
                    Scorer::Judge(m) => m.clone(),
                    Scorer::Reference => ModelId::new("reference").expect("non-empty"),
                },
                generator: s.generator.clone(),
                instance_id: s.instance_id.clone(),
                paradigm: Paradigm::Da,
            },
            LogEntry::Pwc(r) => UnitKey::Pairwise {
                judge: r.judge.clone(),
                generator_first: r.generator_first.clone(),
                generator_second: r.generator_second.clone(),
                instance_id: r.instance_id.clone(),
            },
            LogEntry::Failed(f) => f.unit.clone(),
        }
    }

    /// Duplicate-detection key. Failed units share the key space with their
    /// would-be verdicts, so a unit is logged at most once.
    fn dedup_key(&self) -> String {
        match &self.entry {
            LogEntry::Rubric(v) => format!(
                "rubric|{}|{}|{}|{}|{}",
                v.judge, v.generator, v.instance_id, v.rubric_id, v.paradigm
            ),
            LogEntry::Da(s) => format!(
                "da|{}|{}|{}",
                match &s.scorer {
                    Scorer::Judge(m) => m.as_str(),
                    Scorer::Reference => "reference",
                },
                s.generator,
                s.instance_id
            ),
            LogEntry::Pwc(r) => format!(
                "pwc|{}|{}|{}|{}",
                r.judge, r.generator_first, r.generator_second, r.instance_id
            ),
            LogEntry::Failed(f) => format!("failed|{:?}", f.unit),
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.entry {
            LogEntry::Rubric(v) => v.validate(),
            LogEntry::Pwc(r) => r.validate(),
            LogEntry::Da(_) | LogEntry::Failed(_) => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct VerdictLine {
    schema: String,
    #[serde(flatten)]
    record: LogRecord,
}

/// An in-memory verdict log: an ordered, append-only sequence of records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerdictLog {
    pub records: Vec<LogRecord>,
}

impl VerdictLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends records, rejecting duplicate unit keys.
    pub fn append_all(&mut self, records: Vec<LogRecord>) -> Result<()> {
        let mut keys: BTreeSet<String> = self.records.iter().map(|r| r.dedup_key()).collect();
        for record in records {
            record.validate()?;
            let key = record.dedup_key();
            if !keys.insert(key.clone()) {
                return Err(Error::Validation(format!("duplicate verdict record: {key}")));
            }
            self.records.push(record);
        }
        Ok(())
    }

    pub fn rubric_verdicts(&self) -> impl Iterator<Item = &RubricVerdict> {
        self.records.iter().filter_map(|r| match &r.entry {
            LogEntry::Rubric(v) => Some(v),
            _ => None,
        })
    }

    pub fn da_scores(&self) -> impl Iterator<Item = &InstanceScore> {
        self.records.iter().filter_map(|r| match &r.entry {
            LogEntry::Da(s) => Some(s),
            _ => None,
        })
    }

    pub fn pairwise_runs(&self) -> impl Iterator<Item = &PairwiseRun> {
        self.records.iter().filter_map(|r| match &r.entry {
            LogEntry::Pwc(p) => Some(p),
            _ => None,
        })
    }

    pub fn failed_units(&self) -> impl Iterator<Item = &FailedUnit> {
        self.records.iter().filter_map(|r| match &r.entry {
            LogEntry::Failed(f) => Some(f),
            _ => None,
        })
    }

    /// Every record must resolve to a dataset instance/rubric and to roster
    /// models.
    pub fn validate_against(
        &self,
        dataset: &[BenchmarkInstance],
        roster: &BTreeSet<ModelId>,
    ) -> Result<()> {
        let by_id: BTreeMap<&str, &BenchmarkInstance> =
            dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();
        let check_model = |m: &ModelId| -> Result<()> {
            if roster.contains(m) {
                Ok(())
            } else {
                Err(Error::CrossRef(format!("model '{m}' is not in the roster")))
            }
        };
        let check_instance = |id: &str| -> Result<&BenchmarkInstance> {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| Error::CrossRef(format!("unknown instance '{id}'")))
        };
        for record in &self.records {
            match &record.entry {
                LogEntry::Rubric(v) => {
                    check_model(&v.judge)?;
                    check_model(&v.generator)?;
                    let instance = check_instance(&v.instance_id)?;
                    if instance.rubric(&v.rubric_id).is_none() {
                        return Err(Error::CrossRef(format!(
                            "unknown rubric '{}' on instance '{}'",
                            v.rubric_id, v.instance_id
                        )));
                    }
                }
                LogEntry::Da(s) => {
                    if let Scorer::Judge(judge) = &s.scorer {
                        check_model(judge)?;
                    }
                    check_model(&s.generator)?;
                    check_instance(&s.instance_id)?;
                }
                LogEntry::Pwc(r) => {
                    check_model(&r.judge)?;
                    check_model(&r.generator_first)?;
                    check_model(&r.generator_second)?;
                    check_instance(&r.instance_id)?;
                }
                LogEntry::Failed(_) => {}
            }
        }
        Ok(())
    }
}

/// Reads a verdict log, enforcing schema version and unit-key uniqueness.
pub fn read_verdicts(path: &Path) -> Result<VerdictLog> {
    let lines: Vec<VerdictLine> = read_jsonl(path, VERDICTS_SCHEMA)?;
    let mut log = VerdictLog::new();
    log.append_all(lines.into_iter().map(|l| l.record).collect())?;
    Ok(log)
}

pub fn write_verdicts(path: &Path, log: &VerdictLog) -> Result<()> {
    let lines: Vec<VerdictLine> = log
        .records
        .iter()
        .map(|r| VerdictLine {
            schema: VERDICTS_SCHEMA.into(),
            record: r.clone(),
        })
        .collect();
    write_jsonl(path, &lines)
}

/// Append-only on-disk log writer: the single serialization point for a
/// judging run. Concurrent workers funnel their records through one store.
pub struct VerdictStore {
    file: File,
    keys: BTreeSet<String>,
    units: BTreeSet<UnitKey>,
}

impl VerdictStore {
    /// Opens (or creates) a log for appending, loading existing unit keys so
    /// resumed runs can skip already-dispatched work.
    pub fn open_append(path: &Path) -> Result<Self> {
        let existing = if path.exists() {
            read_verdicts(path)?
        } else {
            VerdictLog::new()
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(VerdictStore {
            file,
            keys: existing.records.iter().map(|r| r.dedup_key()).collect(),
            units: existing.records.iter().map(|r| r.unit_key()).collect(),
        })
    }

    pub fn contains_unit(&self, unit: &UnitKey) -> bool {
        self.units.contains(unit)
    }

    pub fn logged_units(&self) -> &BTreeSet<UnitKey> {
        &self.units
    }

    /// Appends one record, flushing the line to disk before returning.
    pub fn append(&mut self, record: LogRecord) -> Result<()> {
        record.validate()?;
        let key = record.dedup_key();
        if self.keys.contains(&key) {
            return Err(Error::Validation(format!("duplicate verdict record: {key}")));
        }
        let line = VerdictLine {
            schema: VERDICTS_SCHEMA.into(),
            record,
        };
        serde_json::to_writer(&mut self.file, &line)?;
        self.file.write_all(b"\n")?;
        self.file.flush()?;
        self.keys.insert(key);
        self.units.insert(line.record.unit_key());
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reference sets
// ---------------------------------------------------------------------------

/// How a reference set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Verifier,
    Committee,
    External,
}

/// Ground-truth verdicts b* and scores s* per generator and instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub provenance: Provenance,
    pub score_mode: ScoreMode,
    /// (generator, instance, rubric) -> met?
    pub rubric_refs: BTreeMap<(ModelId, String, String), bool>,
    /// (generator, instance) -> s*
    pub score_refs: BTreeMap<(ModelId, String), Score>,
}

impl ReferenceSet {
    pub fn new(provenance: Provenance, score_mode: ScoreMode) -> Self {
        ReferenceSet {
            provenance,
            score_mode,
            rubric_refs: BTreeMap::new(),
            score_refs: BTreeMap::new(),
        }
    }

    pub fn rubric_ref(&self, generator: &ModelId, instance_id: &str, rubric_id: &str) -> Option<bool> {
        self.rubric_refs
            .get(&(generator.clone(), instance_id.to_string(), rubric_id.to_string()))
            .copied()
    }

    pub fn score_ref(&self, generator: &ModelId, instance_id: &str) -> Option<&Score> {
        self.score_refs
            .get(&(generator.clone(), instance_id.to_string()))
    }

    /// Checks that every stored s* equals the configured scoring function of
    /// the stored b* wherever both exist.
    pub fn validate_consistency(&self, dataset: &[BenchmarkInstance]) -> Result<()> {
        let by_id: BTreeMap<&str, &BenchmarkInstance> =
            dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();
        for ((generator, instance_id), stored) in &self.score_refs {
            let Some(instance) = by_id.get(instance_id.as_str()) else {
                return Err(Error::CrossRef(format!(
                    "score reference for unknown instance '{instance_id}'"
                )));
            };
            let mut verdicts = Vec::with_capacity(instance.rubrics.len());
            let mut complete = true;
            for rubric in &instance.rubrics {
                match self.rubric_ref(generator, instance_id, &rubric.rubric_id) {
                    Some(met) => verdicts.push(met),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete {
                continue; // s* may come from elsewhere when b* is partial
            }
            let expected = score_from_verdicts(instance, &verdicts, self.score_mode)?;
            let consistent = match (&expected, stored) {
                (Score::Fraction(a), Score::Fraction(b)) => a == b,
                (a, b) => a.as_f64() == b.as_f64(),
            };
            if !consistent {
                return Err(Error::Validation(format!(
                    "reference score for ({generator}, {instance_id}) is {} but rubric refs imply {}",
                    stored.as_f64(),
                    expected.as_f64()
                )));
            }
        }
        Ok(())
    }
}

/// Applies the configured score function to one instance's verdict vector
/// (ordered as the instance's rubrics).
pub fn score_from_verdicts(
    instance: &BenchmarkInstance,
    verdicts: &[bool],
    mode: ScoreMode,
) -> Result<Score> {
    if verdicts.len() != instance.rubrics.len() {
        return Err(Error::Validation(format!(
            "instance '{}': {} verdicts for {} rubrics",
            instance.instance_id,
            verdicts.len(),
            instance.rubrics.len()
        )));
    }
    match mode {
        ScoreMode::UnweightedFraction => {
            let met = verdicts.iter().filter(|m| **m).count() as u32;
            Ok(Score::Fraction(Fraction::new(met, verdicts.len() as u32)?))
        }
        ScoreMode::WeightedClipped => {
            let positive_total: f64 = instance
                .rubrics
                .iter()
                .map(|r| r.weight)
                .filter(|w| *w > 0.0)
                .sum();
            if positive_total <= 0.0 {
                return Err(Error::Scoring(format!(
                    "instance '{}' has no positive-weight rubric; weighted scoring undefined",
                    instance.instance_id
                )));
            }
            let earned: f64 = instance
                .rubrics
                .iter()
                .zip(verdicts)
                .filter(|(_, met)| **met)
                .map(|(r, _)| r.weight)
                .sum();
            Score::value((earned / positive_total).clamp(0.0, 1.0))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReferenceLine {
    RubricRef {
        provenance: Provenance,
        generator: ModelId,
        instance_id: String,
        rubric_id: String,
        met: bool,
    },
    ScoreRef {
        provenance: Provenance,
        score_mode: ScoreMode,
        generator: ModelId,
        instance_id: String,
        score: Score,
    },
}

#[derive(Serialize, Deserialize)]
struct ReferenceLineWrapper {
    schema: String,
    #[serde(flatten)]
    line: ReferenceLine,
}

pub fn load_reference(path: &Path) -> Result<ReferenceSet> {
    let lines: Vec<ReferenceLineWrapper> = read_jsonl(path, REFERENCE_SCHEMA)?;
    let mut provenance = None;
    let mut score_mode = ScoreMode::default();
    let mut set = ReferenceSet::new(Provenance::External, score_mode);
    for wrapper in lines {
        let p = match &wrapper.line {
            ReferenceLine::RubricRef { provenance, .. } => *provenance,
            ReferenceLine::ScoreRef { provenance, .. } => *provenance,
        };
        match provenance {
            None => provenance = Some(p),
            Some(existing) if existing != p => {
                return Err(Error::Validation(
                    "reference file mixes provenances".into(),
                ))
            }
            _ => {}
        }
        match wrapper.line {
            ReferenceLine::RubricRef {
                generator,
                instance_id,
                rubric_id,
                met,
                ..
            } => {
                if set
                    .rubric_refs
                    .insert((generator, instance_id, rubric_id), met)
                    .is_some()
                {
                    return Err(Error::Validation("duplicate rubric reference".into()));
                }
            }
            ReferenceLine::ScoreRef {
                generator,
                instance_id,
                score,
                score_mode: mode,
                ..
            } => {
                score_mode = mode;
                if set.score_refs.insert((generator, instance_id), score).is_some() {
                    return Err(Error::Validation("duplicate score reference".into()));
                }
            }
        }
    }
    set.provenance = provenance.unwrap_or(Provenance::External);
    set.score_mode = score_mode;
    Ok(set)
}

pub fn save_reference(path: &Path, reference: &ReferenceSet) -> Result<()> {
    let mut lines = Vec::new();
    for ((generator, instance_id, rubric_id), met) in &reference.rubric_refs {
        lines.push(ReferenceLineWrapper {
            schema: REFERENCE_SCHEMA.into(),
            line: ReferenceLine::RubricRef {
                provenance: reference.provenance,
                generator: generator.clone(),
                instance_id: instance_id.clone(),
                rubric_id: rubric_id.clone(),
                met: *met,
            },
        });
    }
    for ((generator, instance_id), score) in &reference.score_refs {
        lines.push(ReferenceLineWrapper {
            schema: REFERENCE_SCHEMA.into(),
            line: ReferenceLine::ScoreRef {
                provenance: reference.provenance,
                score_mode: reference.score_mode,
                generator: generator.clone(),
                instance_id: instance_id.clone(),
                score: *score,
            },
        });
    }
    write_jsonl(path, &lines)
}

/// Builds the ground truth for a verifiable dataset by running every
/// rubric's checker over every generator output.
///
/// Verifier references always use the unweighted fraction: s* times the
/// rubric count equals the met count exactly.
pub fn build_reference_from_verifiers(
    dataset: &[BenchmarkInstance],
    outputs: &[GeneratorOutput],
) -> Result<ReferenceSet> {
    let unverifiable: Vec<String> = dataset
        .iter()
        .flat_map(|i| {
            i.rubrics
                .iter()
                .filter(|r| r.verifier.is_none())
                .map(move |r| format!("{}/{}", i.instance_id, r.rubric_id))
        })
        .collect();
    if !unverifiable.is_empty() {
        return Err(Error::Coverage(format!(
            "rubrics without verifier specs: {}",
            unverifiable.join(", ")
        )));
    }
    let by_id: BTreeMap<&str, &BenchmarkInstance> =
        dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let mut reference = ReferenceSet::new(Provenance::Verifier, ScoreMode::UnweightedFraction);
    for output in outputs {
        let instance = by_id.get(output.instance_id.as_str()).ok_or_else(|| {
            Error::CrossRef(format!(
                "output references unknown instance '{}'",
                output.instance_id
            ))
        })?;
        let (verdicts, s_star) = verify_instance(instance, &output.completion)?;
        for (rubric, met) in instance.rubrics.iter().zip(&verdicts) {
            reference.rubric_refs.insert(
                (
                    output.generator.clone(),
                    instance.instance_id.clone(),
                    rubric.rubric_id.clone(),
                ),
                *met,
            );
        }
        reference.score_refs.insert(
            (output.generator.clone(), instance.instance_id.clone()),
            Score::Fraction(s_star),
        );
    }
    Ok(reference)
}
