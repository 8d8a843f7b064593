//! Shared domain vocabulary: models and families, benchmark instances and
//! rubrics, verdicts, scores, pairwise outcomes, and the self/family/stranger
//! generator partition every bias metric is built on.
//!
//! All types here are immutable value data and safe to share across threads.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verifier::VerifierSpec;

// ---------------------------------------------------------------------------
// Models and families
// ---------------------------------------------------------------------------

/// Identifier of a judge or generator model, e.g. `"gemma-27b"`.
///
/// One model may play both roles. The string `"reference"` is reserved for
/// ground-truth scorers and is rejected in rosters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModelId(String);

impl ModelId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Validation("model id must be non-empty".into()));
        }
        Ok(ModelId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ModelId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        ModelId::new(s)
    }
}

impl From<ModelId> for String {
    fn from(m: ModelId) -> String {
        m.0
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Explicit model-to-family assignment.
///
/// Families are declared, never inferred from model names: which models count
/// as "related" is a modelling choice the caller has to make, so it lives in
/// a registry file rather than in string heuristics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FamilyRegistry {
    entries: BTreeMap<ModelId, String>,
}

impl FamilyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `model` under `family`. Re-registering with a different
    /// family is rejected: every model has exactly one family.
    pub fn insert(&mut self, model: ModelId, family: impl Into<String>) -> Result<()> {
        let family = family.into();
        if family.is_empty() {
            return Err(Error::Registry(format!(
                "empty family name for model '{model}'"
            )));
        }
        match self.entries.get(&model) {
            Some(existing) if *existing != family => Err(Error::Registry(format!(
                "model '{model}' already registered under family '{existing}'"
            ))),
            _ => {
                self.entries.insert(model, family);
                Ok(())
            }
        }
    }

    pub fn family_of(&self, model: &ModelId) -> Result<&str> {
        self.entries
            .get(model)
            .map(String::as_str)
            .ok_or_else(|| Error::Registry(format!("model '{model}' not in family registry")))
    }

    pub fn contains(&self, model: &ModelId) -> bool {
        self.entries.contains_key(model)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModelId, &str)> {
        self.entries.iter().map(|(m, f)| (m, f.as_str()))
    }
}

/// Which relation a generator has to a given judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorClass {
    /// The judge's own outputs.
    Own,
    /// Same family as the judge, excluding the judge itself.
    Family,
    /// Unrelated to the judge.
    Stranger,
}

/// The disjoint split of a generator roster around one judge:
/// `{judge} ∪ family ∪ strangers`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorPartition {
    pub judge: ModelId,
    pub family: BTreeSet<ModelId>,
    pub strangers: BTreeSet<ModelId>,
}

impl GeneratorPartition {
    pub fn class_of(&self, model: &ModelId) -> Option<GeneratorClass> {
        if *model == self.judge {
            Some(GeneratorClass::Own)
        } else if self.family.contains(model) {
            Some(GeneratorClass::Family)
        } else if self.strangers.contains(model) {
            Some(GeneratorClass::Stranger)
        } else {
            None
        }
    }

    /// Every generator in the partition, including the judge.
    pub fn roster(&self) -> BTreeSet<ModelId> {
        let mut r = BTreeSet::new();
        r.insert(self.judge.clone());
        r.extend(self.family.iter().cloned());
        r.extend(self.strangers.iter().cloned());
        r
    }

    pub fn len(&self) -> usize {
        1 + self.family.len() + self.strangers.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Splits `roster` into the judge itself, its same-family generators, and
/// the strangers used as the bias baseline.
pub fn partition_generators(
    judge: &ModelId,
    roster: &BTreeSet<ModelId>,
    registry: &FamilyRegistry,
) -> Result<GeneratorPartition> {
    if !roster.contains(judge) {
        return Err(Error::Validation(format!(
            "judge '{judge}' is not in the generator roster"
        )));
    }
    let judge_family = registry.family_of(judge)?;
    let mut family = BTreeSet::new();
    let mut strangers = BTreeSet::new();
    for model in roster {
        if model == judge {
            continue;
        }
        if registry.family_of(model)? == judge_family {
            family.insert(model.clone());
        } else {
            strangers.insert(model.clone());
        }
    }
    Ok(GeneratorPartition {
        judge: judge.clone(),
        family,
        strangers,
    })
}

// ---------------------------------------------------------------------------
// Sign and outcomes
// ---------------------------------------------------------------------------

/// Strict sign: +1, 0, or -1. No tolerance band around zero; score ties must
/// be produced by exact equality upstream, not by this function.
pub fn sign(a: f64) -> Result<i8> {
    if !a.is_finite() {
        return Err(Error::Domain(format!("sign of non-finite value {a}")));
    }
    Ok(if a > 0.0 {
        1
    } else if a < 0.0 {
        -1
    } else {
        0
    })
}

/// A comparison outcome from the first-named generator's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Loss,
    Tie,
    Win,
}

impl Outcome {
    pub fn as_i8(self) -> i8 {
        match self {
            Outcome::Win => 1,
            Outcome::Tie => 0,
            Outcome::Loss => -1,
        }
    }

    /// The same comparison seen from the opponent's side.
    pub fn flip(self) -> Self {
        match self {
            Outcome::Win => Outcome::Loss,
            Outcome::Tie => Outcome::Tie,
            Outcome::Loss => Outcome::Win,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Win),
            0 => Ok(Outcome::Tie),
            -1 => Ok(Outcome::Loss),
            other => Err(Error::Validation(format!(
                "outcome must be one of -1, 0, +1, got {other}"
            ))),
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.as_i8()
    }
}

// ---------------------------------------------------------------------------
// Exact scores
// ---------------------------------------------------------------------------

/// An exact rational score in `[0, 1]`, kept as the integer pair it was
/// produced from so tie comparisons never depend on float rounding.
///
/// Equality and ordering are by value: `1/2 == 2/4`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Fraction {
    num: u32,
    den: u32,
}

impl Fraction {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::Validation("fraction denominator must be > 0".into()));
        }
        if num > den {
            return Err(Error::Validation(format!(
                "score fraction {num}/{den} exceeds 1"
            )));
        }
        Ok(Fraction { num, den })
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        u64::from(self.num) * u64::from(other.den) == u64::from(other.num) * u64::from(self.den)
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (u64::from(self.num) * u64::from(other.den))
            .cmp(&(u64::from(other.num) * u64::from(self.den)))
    }
}

impl Hash for Fraction {
    fn hash<H: Hasher>(&self, state: &mut H) {
        // Hash the reduced form so value-equal fractions hash alike.
        let g = gcd(self.num, self.den);
        (self.num / g).hash(state);
        (self.den / g).hash(state);
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// An instance-level score.
///
/// Unweighted rubric fractions and DA responses stay exact rationals;
/// weighted-clipped scores are reals. Comparisons between two fractions are
/// exact; anything involving a real falls back to `f64::total_cmp`, which is
/// still deterministic because every score is computed in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Score {
    Fraction(Fraction),
    Value(f64),
}

impl Score {
    pub fn value(v: f64) -> Result<Self> {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!("score {v} outside [0, 1]")));
        }
        Ok(Score::Value(v))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Score::Fraction(fr) => fr.as_f64(),
            Score::Value(v) => *v,
        }
    }

    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Score::Fraction(a), Score::Fraction(b)) => a.cmp(b),
            _ => self.as_f64().total_cmp(&other.as_f64()),
        }
    }
}

// ---------------------------------------------------------------------------
// Benchmark data
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub content: String,
}

/// One binary evaluation criterion attached to an instance.
///
/// A negative weight marks a negative rubric: the generator is penalized for
/// satisfying it. The verdict semantics (`met`/`unmet`) are unchanged by
/// polarity; weight only enters weighted scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rubric {
    pub rubric_id: String,
    pub text: String,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifier: Option<VerifierSpec>,
}

fn default_weight() -> f64 {
    1.0
}

impl Rubric {
    pub fn validate(&self) -> Result<()> {
        if self.rubric_id.is_empty() {
            return Err(Error::Validation("rubric_id must be non-empty".into()));
        }
        if !self.weight.is_finite() || self.weight == 0.0 {
            return Err(Error::Validation(format!(
                "rubric '{}' has weight {}, must be finite and non-zero",
                self.rubric_id, self.weight
            )));
        }
        if let Some(spec) = &self.verifier {
            spec.validate().map_err(|e| {
                Error::Validation(format!("rubric '{}': {e}", self.rubric_id))
            })?;
        }
        Ok(())
    }

    /// Whether the rubric can be checked programmatically.
    pub fn is_verifiable(&self) -> bool {
        self.verifier.is_some()
    }
}

/// A prompt conversation plus its per-instance rubrics. The judged completion
/// is not part of the instance; it is appended separately at prompt time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub instance_id: String,
    pub conversation: Vec<Turn>,
    pub rubrics: Vec<Rubric>,
}

impl BenchmarkInstance {
    pub fn validate(&self) -> Result<()> {
        if self.instance_id.is_empty() {
            return Err(Error::Validation("instance_id must be non-empty".into()));
        }
        if self.conversation.is_empty() {
            return Err(Error::Validation(format!(
                "instance '{}' has an empty conversation",
                self.instance_id
            )));
        }
        if self.conversation.last().map(|t| t.role) != Some(Role::User) {
            return Err(Error::Validation(format!(
                "instance '{}': last conversation turn must be from the user",
                self.instance_id
            )));
        }
        if self.rubrics.is_empty() {
            return Err(Error::Validation(format!(
                "instance '{}' has no rubrics",
                self.instance_id
            )));
        }
        let mut seen = BTreeSet::new();
        for rubric in &self.rubrics {
            rubric.validate()?;
            if !seen.insert(rubric.rubric_id.as_str()) {
                return Err(Error::Validation(format!(
                    "instance '{}': duplicate rubric id '{}'",
                    self.instance_id, rubric.rubric_id
                )));
            }
        }
        Ok(())
    }

    pub fn rubric(&self, rubric_id: &str) -> Option<&Rubric> {
        self.rubrics.iter().find(|r| r.rubric_id == rubric_id)
    }
}

/// One generator's completion for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOutput {
    pub instance_id: String,
    pub generator: ModelId,
    pub completion: String,
}

// ---------------------------------------------------------------------------
// Judge decisions
// ---------------------------------------------------------------------------

/// How the judge was asked: one rubric at a time (SR), all rubrics in one
/// call (AR), a direct score (DA), or a pairwise comparison (PWC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "SR")]
    Sr,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "DA")]
    Da,
    #[serde(rename = "PWC")]
    Pwc,
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Paradigm::Sr => "SR",
            Paradigm::Ar => "AR",
            Paradigm::Da => "DA",
            Paradigm::Pwc => "PWC",
        })
    }
}

/// One binary rubric verdict: b = +1 if met, -1 if unmet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricVerdict {
    pub judge: ModelId,
    pub generator: ModelId,
    pub instance_id: String,
    pub rubric_id: String,
    pub met: bool,
    pub paradigm: Paradigm,
    /// Pointer to the stored raw response this verdict was parsed from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_ref: Option<String>,
}

impl RubricVerdict {
    pub fn b(&self) -> i8 {
        if self.met {
            1
        } else {
            -1
        }
    }

    /// Uniqueness key: one verdict per (judge, generator, instance, rubric,
    /// paradigm).
    pub fn key(&self) -> (&ModelId, &ModelId, &str, &str, Paradigm) {
        (
            &self.judge,
            &self.generator,
            &self.instance_id,
            &self.rubric_id,
            self.paradigm,
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self.paradigm {
            Paradigm::Sr | Paradigm::Ar => Ok(()),
            other => Err(Error::Validation(format!(
                "rubric verdicts only arise under SR or AR, got {other}"
            ))),
        }
    }
}

/// Who produced an instance score.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scorer {
    Judge(ModelId),
    Reference,
}

impl Scorer {
    pub fn as_judge(&self) -> Option<&ModelId> {
        match self {
            Scorer::Judge(m) => Some(m),
            Scorer::Reference => None,
        }
    }
}

impl Serialize for Scorer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scorer::Judge(m) => s.serialize_str(m.as_str()),
            Scorer::Reference => s.serialize_str("reference"),
        }
    }
}

impl<'de> Deserialize<'de> for Scorer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "reference" {
            Ok(Scorer::Reference)
        } else {
            ModelId::new(s).map(Scorer::Judge).map_err(serde::de::Error::custom)
        }
    }
}

/// Where an instance score came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreSource {
    #[serde(rename = "SR")]
    Sr,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "DA")]
    Da,
    #[serde(rename = "verifier")]
    Verifier,
    #[serde(rename = "committee")]
    Committee,
}

/// A scalar score s in [0, 1] for one (scorer, generator, instance) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    #[serde(rename = "judge")]
    pub scorer: Scorer,
    pub generator: ModelId,
    pub instance_id: String,
    pub score: Score,
    pub source: ScoreSource,
}

/// One ordered pairwise run: the judge saw `generator_first`'s output as
/// Response A and `generator_second`'s as Response B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRun {
    pub judge: ModelId,
    pub generator_first: ModelId,
    pub generator_second: ModelId,
    pub instance_id: String,
    pub outcome: RunOutcome,
}

impl PairwiseRun {
    pub fn validate(&self) -> Result<()> {
        if self.generator_first == self.generator_second {
            return Err(Error::Validation(format!(
                "pairwise run compares '{}' against itself",
                self.generator_first
            )));
        }
        Ok(())
    }

    pub fn key(&self) -> (&ModelId, &ModelId, &ModelId, &str) {
        (
            &self.judge,
            &self.generator_first,
            &self.generator_second,
            &self.instance_id,
        )
    }
}

/// Which presented response won a single pairwise run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunOutcome {
    First,
    Second,
    Tie,
}

/// A double-run pairwise comparison resolved to a canonical orientation:
/// w = +1/0/-1 for the named generator against the opponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedComparison {
    pub judge: ModelId,
    pub generator: ModelId,
    pub opponent: ModelId,
    pub instance_id: String,
    pub w: Outcome,
}

/// How per-instance scores are derived from rubric verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// s = met / total, an exact fraction.
    #[default]
    UnweightedFraction,
    /// s = clamp(sum of met weights / sum of positive weights, 0, 1).
    WeightedClipped,
}
