//! The metric core: overestimation rates, HSPP ratios, pairwise and rubric
//! accuracy, and the overestimation subtype breakdown.
//!
//! Every metric reports explicit (numerator, denominator, excluded) counts.
//! Zero denominators yield an explicit undefined marker, never a coerced 0
//! or 1: silently imputing a rate would fabricate bias. Missing verdicts are
//! excluded from both sides of each count and tallied.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    BenchmarkInstance, GeneratorPartition, InstanceScore, ModelId, Outcome, PairwiseRun, Paradigm,
    ResolvedComparison, RubricVerdict, Score, ScoreMode, ScoreSource, Scorer,
};
use crate::judge::parse::resolve_pairwise;
use crate::store::{score_from_verdicts, ReferenceSet};

// ---------------------------------------------------------------------------
// Counted rates
// ---------------------------------------------------------------------------

/// A rate with its integer counts. `value()` is `None` when the denominator
/// is zero (undefined, flagged downstream as such).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Rate {
    pub numerator: u64,
    pub denominator: u64,
    pub excluded: u64,
}

impl Rate {
    pub fn value(&self) -> Option<f64> {
        if self.denominator == 0 {
            None
        } else {
            Some(self.numerator as f64 / self.denominator as f64)
        }
    }

    pub fn is_defined(&self) -> bool {
        self.denominator > 0
    }
}

/// Granularity of an overestimation analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Instance,
    Rubric,
}

/// Per-(judge, generator) overestimation rates.
#[derive(Debug, Clone, PartialEq)]
pub struct OverestimationTable {
    pub level: Level,
    pub cells: BTreeMap<(ModelId, ModelId), Rate>,
}

impl OverestimationTable {
    pub fn rate(&self, judge: &ModelId, generator: &ModelId) -> Option<&Rate> {
        self.cells.get(&(judge.clone(), generator.clone()))
    }
}

// ---------------------------------------------------------------------------
// Exact ratio arithmetic
// ---------------------------------------------------------------------------

fn gcd128(a: u128, b: u128) -> u128 {
    if b == 0 {
        a.max(1)
    } else {
        gcd128(b, a % b)
    }
}

/// Sum of rates as one exact fraction, reduced along the way. `None` only on
/// u128 overflow (beyond any realistic corpus).
fn sum_fraction(rates: &[&Rate]) -> Option<(u128, u128)> {
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    for rate in rates {
        let rn = rate.numerator as u128;
        let rd = rate.denominator as u128;
        num = num.checked_mul(rd)?.checked_add(rn.checked_mul(den)?)?;
        den = den.checked_mul(rd)?;
        let g = gcd128(num, den);
        num /= g;
        den /= g;
    }
    Some((num, den))
}

/// The mean of the defined rates in `rates`, as an exact fraction, plus the
/// defined/undefined component counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanRate {
    pub mean_num: Option<u128>,
    pub mean_den: Option<u128>,
    pub defined: usize,
    pub undefined: usize,
}

impl MeanRate {
    pub fn of(rates: &[&Rate]) -> MeanRate {
        let defined: Vec<&Rate> = rates.iter().copied().filter(|r| r.is_defined()).collect();
        let undefined = rates.len() - defined.len();
        if defined.is_empty() {
            return MeanRate {
                mean_num: None,
                mean_den: None,
                defined: 0,
                undefined,
            };
        }
        match sum_fraction(&defined) {
            Some((num, den)) => {
                let k = defined.len() as u128;
                match den.checked_mul(k) {
                    Some(full_den) => {
                        let g = gcd128(num, full_den);
                        MeanRate {
                            mean_num: Some(num / g),
                            mean_den: Some(full_den / g),
                            defined: defined.len(),
                            undefined,
                        }
                    }
                    None => MeanRate {
                        mean_num: None,
                        mean_den: None,
                        defined: defined.len(),
                        undefined,
                    },
                }
            }
            None => MeanRate {
                mean_num: None,
                mean_den: None,
                defined: defined.len(),
                undefined,
            },
        }
    }

    pub fn value(&self) -> Option<f64> {
        match (self.mean_num, self.mean_den) {
            (Some(n), Some(d)) if d > 0 => Some(n as f64 / d as f64),
            _ => None,
        }
    }
}

/// Exact ratio of two fractions, `None` when the denominator fraction is
/// zero or undefined.
fn ratio_fraction(
    num: (u128, u128),
    den: (u128, u128),
) -> Option<(u128, u128)> {
    if den.0 == 0 {
        return None;
    }
    let rn = num.0.checked_mul(den.1)?;
    let rd = num.1.checked_mul(den.0)?;
    let g = gcd128(rn, rd);
    Some((rn / g, rd / g))
}

// ---------------------------------------------------------------------------
// Instance scores from rubric verdicts
// ---------------------------------------------------------------------------

/// Result of turning rubric verdicts into instance scores. Instances with
/// incomplete verdict coverage are excluded and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredInstances {
    pub scores: Vec<InstanceScore>,
    pub excluded_incomplete: u64,
}

/// Computes s per (judge, generator, instance) from SR or AR rubric
/// verdicts. A (judge, generator, instance, paradigm) cell is scored only
/// when every rubric of the instance has a verdict; partial cells are
/// excluded and counted.
pub fn instance_scores_from_rubric_verdicts(
    verdicts: &[RubricVerdict],
    dataset: &[BenchmarkInstance],
    mode: ScoreMode,
) -> Result<ScoredInstances> {
    let by_id: BTreeMap<&str, &BenchmarkInstance> =
        dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    // (judge, paradigm, generator, instance) -> rubric_id -> met
    let mut cells: BTreeMap<(ModelId, Paradigm, ModelId, String), BTreeMap<&str, bool>> =
        BTreeMap::new();
    for verdict in verdicts {
        verdict.validate()?;
        let instance = by_id.get(verdict.instance_id.as_str()).ok_or_else(|| {
            Error::CrossRef(format!("verdict references unknown instance '{}'", verdict.instance_id))
        })?;
        if instance.rubric(&verdict.rubric_id).is_none() {
            return Err(Error::CrossRef(format!(
                "verdict references unknown rubric '{}' on instance '{}'",
                verdict.rubric_id, verdict.instance_id
            )));
        }
        cells
            .entry((
                verdict.judge.clone(),
                verdict.paradigm,
                verdict.generator.clone(),
                verdict.instance_id.clone(),
            ))
            .or_default()
            .insert(verdict.rubric_id.as_str(), verdict.met);
    }

    let mut scores = Vec::new();
    let mut excluded = 0;
    for ((judge, paradigm, generator, instance_id), map) in cells {
        let instance = by_id[instance_id.as_str()];
        if map.len() != instance.rubrics.len() {
            excluded += 1;
            continue;
        }
        let ordered: Vec<bool> = instance
            .rubrics
            .iter()
            .map(|r| map[r.rubric_id.as_str()])
            .collect();
        let score = score_from_verdicts(instance, &ordered, mode)?;
        scores.push(InstanceScore {
            scorer: Scorer::Judge(judge),
            generator,
            instance_id,
            score,
            source: match paradigm {
                Paradigm::Sr => ScoreSource::Sr,
                _ => ScoreSource::Ar,
            },
        });
    }
    Ok(ScoredInstances {
        scores,
        excluded_incomplete: excluded,
    })
}

// ---------------------------------------------------------------------------
// Outcomes and comparison sets
// ---------------------------------------------------------------------------

/// (generator, instance) -> score, for one scorer.
pub type ScoreTable = BTreeMap<(ModelId, String), Score>;

/// Groups judge-side instance scores into per-judge score tables.
pub fn judge_score_tables(scores: &[InstanceScore]) -> BTreeMap<ModelId, ScoreTable> {
    let mut tables: BTreeMap<ModelId, ScoreTable> = BTreeMap::new();
    for s in scores {
        if let Scorer::Judge(judge) = &s.scorer {
            tables
                .entry(judge.clone())
                .or_default()
                .insert((s.generator.clone(), s.instance_id.clone()), s.score);
        }
    }
    tables
}

/// w = sgn(s - s'), compared exactly.
pub fn judge_outcome(s: &Score, s_opponent: &Score) -> Outcome {
    match s.cmp_exact(s_opponent) {
        std::cmp::Ordering::Greater => Outcome::Win,
        std::cmp::Ordering::Equal => Outcome::Tie,
        std::cmp::Ordering::Less => Outcome::Loss,
    }
}

/// w* = sgn(s* - s*'), compared exactly.
pub fn reference_outcome(s_star: &Score, s_star_opponent: &Score) -> Outcome {
    judge_outcome(s_star, s_star_opponent)
}

/// All of one scorer's pairwise outcomes: w(g, g', x) with antisymmetry baked
/// in (only the canonical g < g' orientation is stored).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonSet {
    canonical: BTreeMap<(ModelId, ModelId, String), Outcome>,
}

impl ComparisonSet {
    /// Derives every available pairwise outcome from a score table.
    pub fn from_score_table(table: &ScoreTable) -> ComparisonSet {
        let mut by_instance: BTreeMap<&str, Vec<(&ModelId, &Score)>> = BTreeMap::new();
        for ((generator, instance_id), score) in table {
            by_instance
                .entry(instance_id.as_str())
                .or_default()
                .push((generator, score));
        }
        let mut canonical = BTreeMap::new();
        for (instance_id, entries) in by_instance {
            for (i, (g1, s1)) in entries.iter().enumerate() {
                for (g2, s2) in entries.iter().skip(i + 1) {
                    // entries come out of a BTreeMap, so g1 < g2 already
                    canonical.insert(
                        ((*g1).clone(), (*g2).clone(), instance_id.to_string()),
                        judge_outcome(s1, s2),
                    );
                }
            }
        }
        ComparisonSet { canonical }
    }

    /// Collects resolved pairwise comparisons, rejecting antisymmetry
    /// violations.
    pub fn from_resolved(comparisons: &[ResolvedComparison]) -> Result<ComparisonSet> {
        let mut canonical: BTreeMap<(ModelId, ModelId, String), Outcome> = BTreeMap::new();
        for c in comparisons {
            if c.generator == c.opponent {
                return Err(Error::Validation(format!(
                    "comparison of '{}' against itself",
                    c.generator
                )));
            }
            let (key, w) = if c.generator < c.opponent {
                (
                    (c.generator.clone(), c.opponent.clone(), c.instance_id.clone()),
                    c.w,
                )
            } else {
                (
                    (c.opponent.clone(), c.generator.clone(), c.instance_id.clone()),
                    c.w.flip(),
                )
            };
            if let Some(existing) = canonical.insert(key, w) {
                if existing != w {
                    return Err(Error::Validation(format!(
                        "conflicting resolved comparisons for ({}, {}) on '{}'",
                        c.generator, c.opponent, c.instance_id
                    )));
                }
            }
        }
        Ok(ComparisonSet { canonical })
    }

    pub fn outcome(&self, generator: &ModelId, opponent: &ModelId, instance_id: &str) -> Option<Outcome> {
        if generator < opponent {
            self.canonical
                .get(&(generator.clone(), opponent.clone(), instance_id.to_string()))
                .copied()
        } else {
            self.canonical
                .get(&(opponent.clone(), generator.clone(), instance_id.to_string()))
                .map(|w| w.flip())
        }
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

/// Resolves double-run PWC logs into canonical comparisons. Runs missing
/// their swapped counterpart are excluded and counted.
pub fn resolve_pairwise_runs(runs: &[PairwiseRun]) -> Result<(Vec<ResolvedComparison>, u64)> {
    let mut by_order: HashMap<(&ModelId, &ModelId, &ModelId, &str), &PairwiseRun> = HashMap::new();
    for run in runs {
        run.validate()?;
        let key = (
            &run.judge,
            &run.generator_first,
            &run.generator_second,
            run.instance_id.as_str(),
        );
        if by_order.insert(key, run).is_some() {
            return Err(Error::Validation(format!(
                "duplicate pairwise run for ({}, {}, {}) on '{}'",
                run.judge, run.generator_first, run.generator_second, run.instance_id
            )));
        }
    }
    let mut resolved = Vec::new();
    let mut unpaired = 0;
    for run in runs {
        let (a, b) = (&run.generator_first, &run.generator_second);
        if a > b {
            continue; // handled from the canonical orientation
        }
        let swapped = by_order.get(&(&run.judge, b, a, run.instance_id.as_str()));
        match swapped {
            Some(back) => resolved.push(ResolvedComparison {
                judge: run.judge.clone(),
                generator: a.clone(),
                opponent: b.clone(),
                instance_id: run.instance_id.clone(),
                w: resolve_pairwise(run.outcome, back.outcome),
            }),
            None => unpaired += 1,
        }
    }
    // Swapped-only runs (canonical order never dispatched) are unpaired too.
    for run in runs {
        if run.generator_first > run.generator_second
            && !by_order.contains_key(&(
                &run.judge,
                &run.generator_second,
                &run.generator_first,
                run.instance_id.as_str(),
            ))
        {
            unpaired += 1;
        }
    }
    Ok((resolved, unpaired))
}

// ---------------------------------------------------------------------------
// Overestimation (instance and rubric level)
// ---------------------------------------------------------------------------

/// Instance-level overestimation of one generator by one judge: among
/// (opponent, instance) pairs the generator should lose, how often the judge
/// ruled better than a loss.
pub fn overestimation_instance(
    judge_cmp: &ComparisonSet,
    ref_cmp: &ComparisonSet,
    generator: &ModelId,
    roster: &BTreeSet<ModelId>,
    instances: &[String],
) -> Rate {
    let mut rate = Rate::default();
    for opponent in roster {
        if opponent == generator {
            continue;
        }
        for instance_id in instances {
            let Some(w_star) = ref_cmp.outcome(generator, opponent, instance_id) else {
                rate.excluded += 1;
                continue;
            };
            if w_star != Outcome::Loss {
                continue;
            }
            match judge_cmp.outcome(generator, opponent, instance_id) {
                Some(w_judge) => {
                    rate.denominator += 1;
                    if w_judge.as_i8() > w_star.as_i8() {
                        rate.numerator += 1;
                    }
                }
                None => rate.excluded += 1,
            }
        }
    }
    rate
}

/// Rubric-level overestimation: among rubrics the generator objectively
/// fails, how often the judge marks them passed.
pub fn overestimation_rubric(
    judge: &ModelId,
    generator: &ModelId,
    verdicts: &[RubricVerdict],
    reference: &ReferenceSet,
) -> Rate {
    let mut judged: HashMap<(&str, &str), bool> = HashMap::new();
    for v in verdicts {
        if v.judge == *judge && v.generator == *generator {
            judged.insert((v.instance_id.as_str(), v.rubric_id.as_str()), v.met);
        }
    }
    let mut rate = Rate::default();
    for ((gen, instance_id, rubric_id), met_star) in &reference.rubric_refs {
        if gen != generator || *met_star {
            continue;
        }
        match judged.get(&(instance_id.as_str(), rubric_id.as_str())) {
            Some(met) => {
                rate.denominator += 1;
                if *met {
                    rate.numerator += 1;
                }
            }
            None => rate.excluded += 1,
        }
    }
    rate
}

/// Builds the full rubric-level overestimation table in one pass over the
/// verdicts. Callers pass one paradigm's verdicts at a time: units must be
/// unique per (judge, generator, instance, rubric).
pub fn overestimation_rubric_table(
    verdicts: &[RubricVerdict],
    reference: &ReferenceSet,
    judges: &BTreeSet<ModelId>,
    generators: &BTreeSet<ModelId>,
) -> OverestimationTable {
    // Reference-failed units per generator, for fast membership checks.
    let mut failed_units: HashMap<(&ModelId, &str, &str), ()> = HashMap::new();
    let mut failed_per_gen: BTreeMap<&ModelId, u64> = BTreeMap::new();
    for ((gen, instance_id, rubric_id), met_star) in &reference.rubric_refs {
        if !*met_star && generators.contains(gen) {
            failed_units.insert((gen, instance_id.as_str(), rubric_id.as_str()), ());
            *failed_per_gen.entry(gen).or_insert(0) += 1;
        }
    }
    let mut cells: BTreeMap<(ModelId, ModelId), Rate> = BTreeMap::new();
    for judge in judges {
        for generator in generators {
            cells.insert((judge.clone(), generator.clone()), Rate::default());
        }
    }
    for v in verdicts {
        if !judges.contains(&v.judge) || !generators.contains(&v.generator) {
            continue;
        }
        if failed_units.contains_key(&(&v.generator, v.instance_id.as_str(), v.rubric_id.as_str())) {
            let cell = cells
                .get_mut(&(v.judge.clone(), v.generator.clone()))
                .expect("cell pre-inserted");
            cell.denominator += 1;
            if v.met {
                cell.numerator += 1;
            }
        }
    }
    // Reference-failed units the judge never ruled on are exclusions.
    for ((judge, generator), cell) in cells.iter_mut() {
        let _ = judge;
        let total = failed_per_gen.get(generator).copied().unwrap_or(0);
        cell.excluded = total.saturating_sub(cell.denominator);
    }
    OverestimationTable {
        level: Level::Rubric,
        cells,
    }
}

/// Builds the instance-level table from per-judge comparison sets.
pub fn overestimation_instance_table(
    judge_cmps: &BTreeMap<ModelId, ComparisonSet>,
    ref_cmp: &ComparisonSet,
    roster: &BTreeSet<ModelId>,
    instances: &[String],
) -> OverestimationTable {
    let mut cells = BTreeMap::new();
    for (judge, cmp) in judge_cmps {
        for generator in roster {
            cells.insert(
                (judge.clone(), generator.clone()),
                overestimation_instance(cmp, ref_cmp, generator, roster, instances),
            );
        }
    }
    OverestimationTable {
        level: Level::Instance,
        cells,
    }
}

// ---------------------------------------------------------------------------
// HSPP ratios (self and family)
// ---------------------------------------------------------------------------

/// One judge's HSPP components and ratios at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsppEntry {
    pub judge: ModelId,
    pub self_rate: Rate,
    pub family_rates: BTreeMap<ModelId, Rate>,
    pub stranger_rates: BTreeMap<ModelId, Rate>,
    pub family_mean: MeanRate,
    pub stranger_mean: MeanRate,
    /// O(J,J) / mean over strangers; `None` when either side is undefined or
    /// the stranger mean is zero.
    pub self_ratio: Option<f64>,
    /// Mean over family / mean over strangers; `None` when the family is
    /// empty or either mean is undefined/zero.
    pub family_ratio: Option<f64>,
    /// The same ratios as exact fractions, for count-exact comparisons.
    pub self_ratio_fraction: Option<(u128, u128)>,
    pub family_ratio_fraction: Option<(u128, u128)>,
}

/// Assembles the HSPP components for one judge from an overestimation table.
pub fn hspp_entry(
    judge: &ModelId,
    table: &OverestimationTable,
    partition: &GeneratorPartition,
) -> HsppEntry {
    let self_rate = table
        .rate(judge, judge)
        .copied()
        .unwrap_or_default();
    let family_rates: BTreeMap<ModelId, Rate> = partition
        .family
        .iter()
        .filter_map(|g| table.rate(judge, g).map(|r| (g.clone(), *r)))
        .collect();
    let stranger_rates: BTreeMap<ModelId, Rate> = partition
        .strangers
        .iter()
        .filter_map(|g| table.rate(judge, g).map(|r| (g.clone(), *r)))
        .collect();
    let family_refs: Vec<&Rate> = family_rates.values().collect();
    let stranger_refs: Vec<&Rate> = stranger_rates.values().collect();
    let family_mean = MeanRate::of(&family_refs);
    let stranger_mean = MeanRate::of(&stranger_refs);

    let stranger_frac = match (stranger_mean.mean_num, stranger_mean.mean_den) {
        (Some(n), Some(d)) => Some((n, d)),
        _ => None,
    };
    let self_ratio_fraction = match (self_rate.is_defined(), stranger_frac) {
        (true, Some(den)) => ratio_fraction(
            (self_rate.numerator as u128, self_rate.denominator as u128),
            den,
        ),
        _ => None,
    };
    let family_ratio_fraction = match (
        (stranger_frac, family_mean.mean_num, family_mean.mean_den),
        partition.family.is_empty(),
    ) {
        ((Some(den), Some(fn_), Some(fd)), false) => ratio_fraction((fn_, fd), den),
        _ => None,
    };
    HsppEntry {
        judge: judge.clone(),
        self_rate,
        family_rates,
        stranger_rates,
        family_mean,
        stranger_mean,
        self_ratio: self_ratio_fraction.map(|(n, d)| n as f64 / d as f64),
        family_ratio: family_ratio_fraction.map(|(n, d)| n as f64 / d as f64),
        self_ratio_fraction,
        family_ratio_fraction,
    }
}

/// HSPP-R_self(J): the judge's overestimation of itself relative to its mean
/// overestimation of strangers. 1 means no self-preference.
pub fn hspp_self(
    judge: &ModelId,
    table: &OverestimationTable,
    partition: &GeneratorPartition,
) -> Option<f64> {
    hspp_entry(judge, table, partition).self_ratio
}

/// HSPP-R_fam(J): same-family overestimation relative to strangers.
pub fn hspp_family(
    judge: &ModelId,
    table: &OverestimationTable,
    partition: &GeneratorPartition,
) -> Option<f64> {
    hspp_entry(judge, table, partition).family_ratio
}

/// HSPP entries for every judge with a partition.
pub fn hspp_report(
    table: &OverestimationTable,
    partitions: &BTreeMap<ModelId, GeneratorPartition>,
) -> BTreeMap<ModelId, HsppEntry> {
    partitions
        .iter()
        .map(|(judge, partition)| (judge.clone(), hspp_entry(judge, table, partition)))
        .collect()
}

// ---------------------------------------------------------------------------
// Accuracy (MIPA and MRA)
// ---------------------------------------------------------------------------

/// Mean Instance Pairwise Accuracy: the fraction of (unordered pair,
/// instance) comparisons where the judge's ordering matches the reference,
/// ties included. Scheduled-but-missing comparisons are excluded and counted.
pub fn mipa(
    judge_cmp: &ComparisonSet,
    ref_cmp: &ComparisonSet,
    roster: &BTreeSet<ModelId>,
    instances: &[String],
) -> Rate {
    let generators: Vec<&ModelId> = roster.iter().collect();
    let mut rate = Rate::default();
    for (i, g1) in generators.iter().enumerate() {
        for g2 in generators.iter().skip(i + 1) {
            for instance_id in instances {
                match (
                    judge_cmp.outcome(g1, g2, instance_id),
                    ref_cmp.outcome(g1, g2, instance_id),
                ) {
                    (Some(w_judge), Some(w_star)) => {
                        rate.denominator += 1;
                        if w_judge == w_star {
                            rate.numerator += 1;
                        }
                    }
                    _ => rate.excluded += 1,
                }
            }
        }
    }
    rate
}

/// Mean Rubric Accuracy: the fraction of the judge's rubric verdicts that
/// match the reference, over every generator in scope.
pub fn mra(
    judge: &ModelId,
    verdicts: &[RubricVerdict],
    reference: &ReferenceSet,
    generators: &BTreeSet<ModelId>,
) -> Rate {
    let mut judged: HashMap<(&ModelId, &str, &str), bool> = HashMap::new();
    for v in verdicts {
        if v.judge == *judge && generators.contains(&v.generator) {
            judged.insert(
                (&v.generator, v.instance_id.as_str(), v.rubric_id.as_str()),
                v.met,
            );
        }
    }
    let mut rate = Rate::default();
    for ((gen, instance_id, rubric_id), met_star) in &reference.rubric_refs {
        if !generators.contains(gen) {
            continue;
        }
        match judged.get(&(gen, instance_id.as_str(), rubric_id.as_str())) {
            Some(met) => {
                rate.denominator += 1;
                if met == met_star {
                    rate.numerator += 1;
                }
            }
            None => rate.excluded += 1,
        }
    }
    rate
}

// ---------------------------------------------------------------------------
// Overestimation subtypes (loss-to-win / loss-to-tie)
// ---------------------------------------------------------------------------

/// Within instance-level overestimations, how many turned a reference loss
/// into a predicted win versus a predicted tie. The two counts partition the
/// overestimation mass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SubtypeBreakdown {
    pub loss_to_win: u64,
    pub loss_to_tie: u64,
}

impl SubtypeBreakdown {
    pub fn total(&self) -> u64 {
        self.loss_to_win + self.loss_to_tie
    }

    /// (loss-to-win share, loss-to-tie share); `None` when there are no
    /// overestimations to break down.
    pub fn shares(&self) -> Option<(f64, f64)> {
        let total = self.total();
        if total == 0 {
            None
        } else {
            Some((
                self.loss_to_win as f64 / total as f64,
                self.loss_to_tie as f64 / total as f64,
            ))
        }
    }
}

pub fn overestimation_subtypes(
    judge_cmp: &ComparisonSet,
    ref_cmp: &ComparisonSet,
    generator: &ModelId,
    roster: &BTreeSet<ModelId>,
    instances: &[String],
) -> SubtypeBreakdown {
    let mut breakdown = SubtypeBreakdown::default();
    for opponent in roster {
        if opponent == generator {
            continue;
        }
        for instance_id in instances {
            let (Some(w_judge), Some(w_star)) = (
                judge_cmp.outcome(generator, opponent, instance_id),
                ref_cmp.outcome(generator, opponent, instance_id),
            ) else {
                continue;
            };
            if w_star == Outcome::Loss && w_judge.as_i8() > w_star.as_i8() {
                match w_judge {
                    Outcome::Win => breakdown.loss_to_win += 1,
                    Outcome::Tie => breakdown.loss_to_tie += 1,
                    Outcome::Loss => unreachable!("loss is not an overestimation"),
                }
            }
        }
    }
    breakdown
}
