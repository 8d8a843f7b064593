//! Multi-judge machinery: majority-vote committees (as mitigation and as
//! ground-truth proxy), inter-judge agreement filtering, centered score
//! delta matrices, and rubric-population slices.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    hspp_entry, mra, overestimation_rubric_table, ComparisonSet, HsppEntry,
    OverestimationTable, Rate, ScoreTable,
};
use crate::model::{
    BenchmarkInstance, GeneratorPartition, ModelId, Paradigm, RubricVerdict, Score, ScoreMode,
};
use crate::store::{score_from_verdicts, Provenance, ReferenceSet};

// ---------------------------------------------------------------------------
// Committees
// ---------------------------------------------------------------------------

/// An odd-sized set of judges voting by simple majority. Odd size means a
/// rubric-level vote can never tie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitteeSpec {
    pub members: Vec<ModelId>,
}

impl CommitteeSpec {
    pub fn new(members: Vec<ModelId>) -> Result<Self> {
        let spec = CommitteeSpec { members };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() || self.members.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "committee needs an odd number of members, got {}",
                self.members.len()
            )));
        }
        let distinct: BTreeSet<&ModelId> = self.members.iter().collect();
        if distinct.len() != self.members.len() {
            return Err(Error::Config("committee members must be distinct".into()));
        }
        Ok(())
    }
}

/// Majority vote over binary verdicts: the sign of the summed b values.
pub fn committee_verdict(member_verdicts: &[bool]) -> Result<bool> {
    if member_verdicts.is_empty() || member_verdicts.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "majority vote needs an odd number of verdicts, got {}",
            member_verdicts.len()
        )));
    }
    let sum: i64 = member_verdicts.iter().map(|m| if *m { 1i64 } else { -1 }).sum();
    Ok(sum > 0)
}

/// Units covered by every committee member, with the majority verdict, plus
/// per-member missing-unit counts.
pub struct CommitteeVerdicts {
    /// (generator, instance, rubric) -> majority met?
    pub verdicts: BTreeMap<(ModelId, String, String), bool>,
    /// Units skipped because this member had no verdict.
    pub missing_per_member: BTreeMap<ModelId, u64>,
}

/// Aggregates SR verdicts into committee majority verdicts. Units missing
/// any member's verdict are excluded and counted against that member.
pub fn committee_verdicts(
    verdicts: &[RubricVerdict],
    committee: &CommitteeSpec,
) -> Result<CommitteeVerdicts> {
    committee.validate()?;
    let members: BTreeSet<&ModelId> = committee.members.iter().collect();
    let mut by_unit: BTreeMap<(ModelId, String, String), BTreeMap<&ModelId, bool>> =
        BTreeMap::new();
    for v in verdicts {
        if !members.contains(&v.judge) {
            continue;
        }
        by_unit
            .entry((v.generator.clone(), v.instance_id.clone(), v.rubric_id.clone()))
            .or_default()
            .insert(&v.judge, v.met);
    }
    let mut out = BTreeMap::new();
    let mut missing: BTreeMap<ModelId, u64> =
        committee.members.iter().map(|m| (m.clone(), 0)).collect();
    for (unit, votes) in by_unit {
        if votes.len() == committee.members.len() {
            let ordered: Vec<bool> = committee.members.iter().map(|m| votes[m]).collect();
            out.insert(unit, committee_verdict(&ordered)?);
        } else {
            for member in &committee.members {
                if !votes.contains_key(member) {
                    *missing.get_mut(member).expect("member pre-inserted") += 1;
                }
            }
        }
    }
    Ok(CommitteeVerdicts {
        verdicts: out,
        missing_per_member: missing,
    })
}

/// Builds a ground-truth proxy from a judge committee: b* is the majority
/// verdict, s* the configured score function over instances with full rubric
/// coverage.
pub fn committee_reference(
    verdicts: &[RubricVerdict],
    committee: &CommitteeSpec,
    dataset: &[BenchmarkInstance],
    mode: ScoreMode,
) -> Result<(ReferenceSet, CommitteeVerdicts)> {
    let aggregated = committee_verdicts(verdicts, committee)?;
    let by_id: BTreeMap<&str, &BenchmarkInstance> =
        dataset.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let mut reference = ReferenceSet::new(Provenance::Committee, mode);
    for ((generator, instance_id, rubric_id), met) in &aggregated.verdicts {
        reference
            .rubric_refs
            .insert((generator.clone(), instance_id.clone(), rubric_id.clone()), *met);
    }
    // Score instances whose rubric coverage is complete.
    let mut by_cell: BTreeMap<(ModelId, String), BTreeMap<&str, bool>> = BTreeMap::new();
    for ((generator, instance_id, rubric_id), met) in &aggregated.verdicts {
        by_cell
            .entry((generator.clone(), instance_id.clone()))
            .or_default()
            .insert(rubric_id.as_str(), *met);
    }
    for ((generator, instance_id), map) in by_cell {
        let Some(instance) = by_id.get(instance_id.as_str()) else {
            return Err(Error::CrossRef(format!(
                "committee verdicts reference unknown instance '{instance_id}'"
            )));
        };
        if map.len() != instance.rubrics.len() {
            continue;
        }
        let ordered: Vec<bool> = instance
            .rubrics
            .iter()
            .map(|r| map[r.rubric_id.as_str()])
            .collect();
        let score = score_from_verdicts(instance, &ordered, mode)?;
        reference
            .score_refs
            .insert((generator, instance_id), score);
    }
    Ok((reference, aggregated))
}

/// Committee-aggregated metrics attributed to one member: the ensemble's
/// majority verdict is used as the member's prediction, evaluated against
/// the external reference and the member's own generator partition.
pub struct CommitteeMemberMetrics {
    pub member: ModelId,
    pub mra: Rate,
    pub hspp: HsppEntry,
}

pub fn committee_member_metrics(
    member: &ModelId,
    aggregated: &CommitteeVerdicts,
    reference: &ReferenceSet,
    partition: &GeneratorPartition,
    generators: &BTreeSet<ModelId>,
) -> CommitteeMemberMetrics {
    let as_verdicts: Vec<RubricVerdict> = aggregated
        .verdicts
        .iter()
        .map(|((generator, instance_id, rubric_id), met)| RubricVerdict {
            judge: member.clone(),
            generator: generator.clone(),
            instance_id: instance_id.clone(),
            rubric_id: rubric_id.clone(),
            met: *met,
            paradigm: Paradigm::Sr,
            raw_ref: None,
        })
        .collect();
    let judges: BTreeSet<ModelId> = [member.clone()].into();
    let table = overestimation_rubric_table(&as_verdicts, reference, &judges, generators);
    CommitteeMemberMetrics {
        member: member.clone(),
        mra: mra(member, &as_verdicts, reference, generators),
        hspp: hspp_entry(member, &table, partition),
    }
}

// ---------------------------------------------------------------------------
// Inter-judge agreement
// ---------------------------------------------------------------------------

/// Pairwise agreement among the judges that ruled on one unit: concordant
/// judge pairs over all judge pairs. `None` below two judges.
pub fn pairwise_agreement(votes: &[bool]) -> Option<f64> {
    let n = votes.len();
    if n < 2 {
        return None;
    }
    let met = votes.iter().filter(|v| **v).count();
    let unmet = n - met;
    let concordant = pairs(met) + pairs(unmet);
    Some(concordant as f64 / pairs(n) as f64)
}

fn pairs(n: usize) -> u64 {
    (n as u64) * (n as u64).saturating_sub(1) / 2
}

/// Whether filtering operates on raw verdict units or on whole instances
/// (keeping an instance's units when its mean unit agreement clears the
/// threshold).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementLevel {
    #[default]
    Unit,
    Instance,
}

/// Per-unit agreement over a verdict corpus. Units with fewer than two
/// judges are dropped (undefined agreement).
pub fn unit_agreements(
    verdicts: &[RubricVerdict],
    judges: &BTreeSet<ModelId>,
) -> BTreeMap<(ModelId, String, String), f64> {
    let mut votes: BTreeMap<(ModelId, String, String), Vec<bool>> = BTreeMap::new();
    let mut seen: BTreeSet<(ModelId, String, String, ModelId)> = BTreeSet::new();
    for v in verdicts {
        if !judges.contains(&v.judge) {
            continue;
        }
        if seen.insert((
            v.generator.clone(),
            v.instance_id.clone(),
            v.rubric_id.clone(),
            v.judge.clone(),
        )) {
            votes
                .entry((v.generator.clone(), v.instance_id.clone(), v.rubric_id.clone()))
                .or_default()
                .push(v.met);
        }
    }
    votes
        .into_iter()
        .filter_map(|(unit, votes)| pairwise_agreement(&votes).map(|a| (unit, a)))
        .collect()
}

/// One threshold's worth of sweep results.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub kept_units: usize,
    /// Mean rubric-level HSPP-self over judges with a defined ratio.
    pub mean_hspp_rubric: Option<f64>,
    pub judges_defined_rubric: usize,
    /// Mean instance-level HSPP-self over judges with a defined ratio.
    pub mean_hspp_instance: Option<f64>,
    pub judges_defined_instance: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub level: AgreementLevel,
    pub rows: Vec<SweepRow>,
}

/// Recomputes HSPP after filtering verdict units by inter-judge agreement,
/// for each threshold. The reference verdicts stay fixed; only the evaluated
/// units are filtered. Instance-level scores are recomputed over each
/// instance's kept rubrics.
pub fn agreement_sweep(
    verdicts: &[RubricVerdict],
    judges: &BTreeSet<ModelId>,
    thresholds: &[f64],
    reference: &ReferenceSet,
    partitions: &BTreeMap<ModelId, GeneratorPartition>,
    dataset: &[BenchmarkInstance],
    level: AgreementLevel,
) -> Result<SweepReport> {
    for t in thresholds {
        if !(0.0..=1.0).contains(t) {
            return Err(Error::Config(format!("agreement threshold {t} outside [0, 1]")));
        }
    }
    let agreements = unit_agreements(verdicts, judges);
    // Instance-level roll-up: mean of the instance's unit agreements.
    let instance_agreement: BTreeMap<(ModelId, String), f64> = match level {
        AgreementLevel::Unit => BTreeMap::new(),
        AgreementLevel::Instance => {
            let mut acc: BTreeMap<(ModelId, String), (f64, usize)> = BTreeMap::new();
            for ((generator, instance_id, _), a) in &agreements {
                let e = acc.entry((generator.clone(), instance_id.clone())).or_insert((0.0, 0));
                e.0 += a;
                e.1 += 1;
            }
            acc.into_iter()
                .map(|(k, (sum, n))| (k, sum / n as f64))
                .collect()
        }
    };

    let generators: BTreeSet<ModelId> = partitions
        .values()
        .flat_map(|p| p.roster())
        .collect();

    let mut rows = Vec::new();
    for &threshold in thresholds {
        let kept: BTreeSet<&(ModelId, String, String)> = agreements
            .iter()
            .filter(|(unit, a)| match level {
                AgreementLevel::Unit => **a >= threshold,
                AgreementLevel::Instance => {
                    instance_agreement[&(unit.0.clone(), unit.1.clone())] >= threshold
                }
            })
            .map(|(unit, _)| unit)
            .collect();

        // Rubric level: filter both verdicts and reference to kept units.
        let kept_verdicts: Vec<RubricVerdict> = verdicts
            .iter()
            .filter(|v| {
                judges.contains(&v.judge)
                    && kept.contains(&(
                        v.generator.clone(),
                        v.instance_id.clone(),
                        v.rubric_id.clone(),
                    ))
            })
            .cloned()
            .collect();
        let mut kept_reference = ReferenceSet::new(reference.provenance, reference.score_mode);
        for (unit, met) in &reference.rubric_refs {
            if kept.contains(unit) {
                kept_reference.rubric_refs.insert(unit.clone(), *met);
            }
        }
        let table = overestimation_rubric_table(&kept_verdicts, &kept_reference, judges, &generators);
        let ratios: Vec<f64> = partitions
            .iter()
            .filter_map(|(judge, partition)| hspp_entry(judge, &table, partition).self_ratio)
            .collect();
        let mean_hspp_rubric = mean_of(&ratios);
        let judges_defined_rubric = ratios.len();

        // Instance level: rescore each (judge, generator, instance) over the
        // instance's kept rubrics; reference scores over the same subset.
        let instance_table = instance_level_table(
            &kept_verdicts,
            &kept_reference,
            judges,
            &generators,
            dataset,
        );
        let iratios: Vec<f64> = partitions
            .iter()
            .filter_map(|(judge, partition)| hspp_entry(judge, &instance_table, partition).self_ratio)
            .collect();
        let mean_hspp_instance = mean_of(&iratios);
        let judges_defined_instance = iratios.len();

        rows.push(SweepRow {
            threshold,
            kept_units: kept.len(),
            mean_hspp_rubric,
            judges_defined_rubric,
            mean_hspp_instance,
            judges_defined_instance,
        });
    }
    Ok(SweepReport { level, rows })
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Instance-level overestimation table computed from rubric verdicts and
/// rubric references, scoring each instance over the rubrics present in the
/// (possibly filtered) reference. A judge's cell uses only instances where
/// the judge covered every kept rubric.
fn instance_level_table(
    verdicts: &[RubricVerdict],
    reference: &ReferenceSet,
    judges: &BTreeSet<ModelId>,
    generators: &BTreeSet<ModelId>,
    dataset: &[BenchmarkInstance],
) -> OverestimationTable {
    // Kept rubric ids per instance: the union over generators of
    // reference-covered rubrics (agreement filtering is per generator, so
    // score each (generator, instance) over its own kept set).
    let mut kept_rubrics: BTreeMap<(ModelId, &str), BTreeSet<&str>> = BTreeMap::new();
    for (generator, instance_id, rubric_id) in reference.rubric_refs.keys() {
        kept_rubrics
            .entry((generator.clone(), instance_id.as_str()))
            .or_default()
            .insert(rubric_id.as_str());
    }

    // Reference scores over kept rubrics.
    let mut ref_table: ScoreTable = BTreeMap::new();
    for ((generator, instance_id), rubrics) in &kept_rubrics {
        let met = rubrics
            .iter()
            .filter(|r| {
                reference
                    .rubric_ref(generator, instance_id, r)
                    .unwrap_or(false)
            })
            .count() as u32;
        if let Ok(fr) = crate::model::Fraction::new(met, rubrics.len() as u32) {
            ref_table.insert(
                (generator.clone(), instance_id.to_string()),
                Score::Fraction(fr),
            );
        }
    }
    let ref_cmp = ComparisonSet::from_score_table(&ref_table);

    // Judge scores over the same kept rubrics.
    let mut judge_votes: BTreeMap<(ModelId, ModelId, String), BTreeMap<&str, bool>> =
        BTreeMap::new();
    for v in verdicts {
        if judges.contains(&v.judge) && generators.contains(&v.generator) {
            judge_votes
                .entry((v.judge.clone(), v.generator.clone(), v.instance_id.clone()))
                .or_default()
                .insert(v.rubric_id.as_str(), v.met);
        }
    }
    let mut judge_tables: BTreeMap<ModelId, ScoreTable> = BTreeMap::new();
    for ((judge, generator, instance_id), votes) in judge_votes {
        let Some(kept) = kept_rubrics.get(&(generator.clone(), instance_id.as_str())) else {
            continue;
        };
        if kept.is_empty() || !kept.iter().all(|r| votes.contains_key(r)) {
            continue;
        }
        let met = kept.iter().filter(|r| votes[**r]).count() as u32;
        if let Ok(fr) = crate::model::Fraction::new(met, kept.len() as u32) {
            judge_tables
                .entry(judge)
                .or_default()
                .insert((generator, instance_id), Score::Fraction(fr));
        }
    }
    let judge_cmps: BTreeMap<ModelId, ComparisonSet> = judge_tables
        .iter()
        .map(|(judge, table)| (judge.clone(), ComparisonSet::from_score_table(table)))
        .collect();
    let instances: Vec<String> = dataset.iter().map(|i| i.instance_id.clone()).collect();
    crate::metrics::overestimation_instance_table(&judge_cmps, &ref_cmp, generators, &instances)
}

// ---------------------------------------------------------------------------
// Centered score delta matrix
// ---------------------------------------------------------------------------

/// Per-(judge, generator) deviation from the reference, centered by each
/// judge's mean deviation. Cells are stored at score scale; display scaling
/// (x100) happens at render time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaMatrix {
    pub judges: Vec<ModelId>,
    pub generators: Vec<ModelId>,
    /// cells[j][g], centered.
    pub cells: Vec<Vec<f64>>,
    /// Mean raw deviation per judge (the subtracted bias).
    pub judge_bias: Vec<f64>,
}

impl DeltaMatrix {
    pub fn cell(&self, judge: usize, generator: usize) -> f64 {
        self.cells[judge][generator]
    }

    /// Display value on the x100 scale.
    pub fn display_cell(&self, judge: usize, generator: usize) -> f64 {
        self.cells[judge][generator] * 100.0
    }
}

/// System-level score per (judge, generator): the mean instance score.
pub fn system_scores(tables: &BTreeMap<ModelId, ScoreTable>) -> BTreeMap<(ModelId, ModelId), f64> {
    let mut acc: BTreeMap<(ModelId, ModelId), (f64, usize)> = BTreeMap::new();
    for (judge, table) in tables {
        for ((generator, _), score) in table {
            let e = acc
                .entry((judge.clone(), generator.clone()))
                .or_insert((0.0, 0));
            e.0 += score.as_f64();
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// System-level reference score per generator.
pub fn reference_system_scores(reference: &ReferenceSet) -> BTreeMap<ModelId, f64> {
    let mut acc: BTreeMap<ModelId, (f64, usize)> = BTreeMap::new();
    for ((generator, _), score) in &reference.score_refs {
        let e = acc.entry(generator.clone()).or_insert((0.0, 0));
        e.0 += score.as_f64();
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// Builds the centered delta matrix. Every (judge, generator) cell and every
/// generator's reference score must be present.
pub fn centered_delta_matrix(
    scores: &BTreeMap<(ModelId, ModelId), f64>,
    reference: &BTreeMap<ModelId, f64>,
) -> Result<DeltaMatrix> {
    let judges: Vec<ModelId> = scores
        .keys()
        .map(|(j, _)| j.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let generators: Vec<ModelId> = reference.keys().cloned().collect();
    if judges.is_empty() || generators.is_empty() {
        return Err(Error::Validation("delta matrix needs scores and a reference".into()));
    }
    let mut gaps = Vec::new();
    for judge in &judges {
        for generator in &generators {
            if !scores.contains_key(&(judge.clone(), generator.clone())) {
                gaps.push(format!("({judge}, {generator})"));
            }
        }
    }
    for (_, generator) in scores.keys() {
        if !reference.contains_key(generator) {
            gaps.push(format!("reference for {generator}"));
        }
    }
    if !gaps.is_empty() {
        gaps.sort();
        gaps.dedup();
        return Err(Error::Validation(format!(
            "delta matrix has missing cells: {}",
            gaps.join(", ")
        )));
    }

    let mut cells = Vec::with_capacity(judges.len());
    let mut judge_bias = Vec::with_capacity(judges.len());
    for judge in &judges {
        let raw: Vec<f64> = generators
            .iter()
            .map(|g| scores[&(judge.clone(), g.clone())] - reference[g])
            .collect();
        let bias = raw.iter().sum::<f64>() / raw.len() as f64;
        cells.push(raw.iter().map(|d| d - bias).collect());
        judge_bias.push(bias);
    }
    Ok(DeltaMatrix {
        judges,
        generators,
        cells,
        judge_bias,
    })
}

// ---------------------------------------------------------------------------
// Slice analyses
// ---------------------------------------------------------------------------

/// The rubric-population dimension to slice HSPP-Rubric over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceDimension {
    /// {default, positive-only}: the full population against rubrics with
    /// positive weight only.
    Polarity,
    /// Rubric text length sextiles paired as short (S1-2), medium (S3-4),
    /// long (S5-6). Length is counted in whitespace-delimited tokens.
    Length,
    /// One bucket per rubric axis category.
    Axis,
    /// One bucket per rubric theme category.
    Theme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub dimension: SliceDimension,
}

/// HSPP-Rubric per judge within one rubric bucket.
#[derive(Debug, Clone, Serialize)]
pub struct SliceBucket {
    pub bucket: String,
    pub rubric_count: usize,
    pub per_judge: BTreeMap<ModelId, Option<f64>>,
    pub mean_judge: Option<f64>,
    pub max_judge: Option<(ModelId, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceReport {
    pub dimension: SliceDimension,
    pub buckets: Vec<SliceBucket>,
}

/// Assigns every rubric of the dataset to the slice's buckets. Polarity
/// buckets overlap by design (`default` is the whole population); the other
/// dimensions partition it.
pub fn slice_buckets(
    dataset: &[BenchmarkInstance],
    dimension: SliceDimension,
) -> Vec<(String, BTreeSet<(String, String)>)> {
    let all: Vec<(&BenchmarkInstance, &crate::model::Rubric)> = dataset
        .iter()
        .flat_map(|i| i.rubrics.iter().map(move |r| (i, r)))
        .collect();
    let key = |i: &BenchmarkInstance, r: &crate::model::Rubric| {
        (i.instance_id.clone(), r.rubric_id.clone())
    };
    match dimension {
        SliceDimension::Polarity => {
            let default: BTreeSet<_> = all.iter().map(|(i, r)| key(i, r)).collect();
            let positive: BTreeSet<_> = all
                .iter()
                .filter(|(_, r)| r.weight > 0.0)
                .map(|(i, r)| key(i, r))
                .collect();
            vec![
                ("default".to_string(), default),
                ("positive_only".to_string(), positive),
            ]
        }
        SliceDimension::Length => {
            // Rank rubrics by token length (ties broken by id for
            // determinism), then cut into six near-equal sextiles and pair
            // them into three buckets.
            let mut ranked: Vec<((String, String), usize)> = all
                .iter()
                .map(|(i, r)| (key(i, r), r.text.split_whitespace().count()))
                .collect();
            ranked.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            let n = ranked.len().max(1);
            let mut buckets = vec![
                ("short_s1_2".to_string(), BTreeSet::new()),
                ("medium_s3_4".to_string(), BTreeSet::new()),
                ("long_s5_6".to_string(), BTreeSet::new()),
            ];
            for (idx, (unit, _)) in ranked.into_iter().enumerate() {
                let sextile = idx * 6 / n;
                buckets[(sextile / 2).min(2)].1.insert(unit);
            }
            buckets
        }
        SliceDimension::Axis | SliceDimension::Theme => {
            let mut map: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
            for (i, r) in &all {
                let category = match dimension {
                    SliceDimension::Axis => r.axis.clone(),
                    _ => r.theme.clone(),
                };
                map.entry(category.unwrap_or_else(|| "(none)".to_string()))
                    .or_default()
                    .insert(key(i, r));
            }
            map.into_iter().collect()
        }
    }
}

/// Rubric-level HSPP-self per judge across the slice's buckets, with the
/// mean- and max-judge summary per bucket.
pub fn slice_hspp(
    verdicts: &[RubricVerdict],
    reference: &ReferenceSet,
    dataset: &[BenchmarkInstance],
    spec: SliceSpec,
    partitions: &BTreeMap<ModelId, GeneratorPartition>,
) -> SliceReport {
    let judges: BTreeSet<ModelId> = partitions.keys().cloned().collect();
    let generators: BTreeSet<ModelId> = partitions.values().flat_map(|p| p.roster()).collect();
    let mut buckets = Vec::new();
    for (name, members) in slice_buckets(dataset, spec.dimension) {
        let bucket_verdicts: Vec<RubricVerdict> = verdicts
            .iter()
            .filter(|v| {
                judges.contains(&v.judge)
                    && members.contains(&(v.instance_id.clone(), v.rubric_id.clone()))
            })
            .cloned()
            .collect();
        let mut bucket_reference = ReferenceSet::new(reference.provenance, reference.score_mode);
        for ((generator, instance_id, rubric_id), met) in &reference.rubric_refs {
            if members.contains(&(instance_id.clone(), rubric_id.clone())) {
                bucket_reference.rubric_refs.insert(
                    (generator.clone(), instance_id.clone(), rubric_id.clone()),
                    *met,
                );
            }
        }
        let table =
            overestimation_rubric_table(&bucket_verdicts, &bucket_reference, &judges, &generators);
        let per_judge: BTreeMap<ModelId, Option<f64>> = partitions
            .iter()
            .map(|(judge, partition)| {
                (judge.clone(), hspp_entry(judge, &table, partition).self_ratio)
            })
            .collect();
        let defined: Vec<(&ModelId, f64)> = per_judge
            .iter()
            .filter_map(|(j, r)| r.map(|r| (j, r)))
            .collect();
        let mean_judge = mean_of(&defined.iter().map(|(_, r)| *r).collect::<Vec<_>>());
        let max_judge = defined
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, r)| ((*j).clone(), *r));
        buckets.push(SliceBucket {
            bucket: name,
            rubric_count: members.len(),
            per_judge,
            mean_judge,
            max_judge,
        });
    }
    SliceReport {
        dimension: spec.dimension,
        buckets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Fraction, Role, Rubric, Turn};
    use proptest::prelude::*;

    fn mid(s: &str) -> ModelId {
        ModelId::new(s).unwrap()
    }

    #[test]
    fn committee_majority_examples() {
        assert!(committee_verdict(&[true, true, false]).unwrap());
        assert!(!committee_verdict(&[false, false, false, true, true]).unwrap());
        assert!(committee_verdict(&[true; 5]).unwrap());
        assert!(committee_verdict(&[true, false]).is_err());
        assert!(committee_verdict(&[]).is_err());
    }

    #[test]
    fn committee_verdict_is_mode_exhaustively() {
        for size in [3usize, 5] {
            for mask in 0..(1u32 << size) {
                let votes: Vec<bool> = (0..size).map(|i| mask & (1 << i) != 0).collect();
                let met = votes.iter().filter(|v| **v).count();
                let expected = met * 2 > size;
                assert_eq!(committee_verdict(&votes).unwrap(), expected, "{votes:?}");
            }
        }
    }

    #[test]
    fn agreement_examples() {
        assert_eq!(pairwise_agreement(&[true; 12]), Some(1.0));
        let half: Vec<bool> = (0..12).map(|i| i < 6).collect();
        // (C(6,2)+C(6,2)) / C(12,2) = 30/66
        let expected = 30.0 / 66.0;
        assert!((pairwise_agreement(&half).unwrap() - expected).abs() < 1e-12);
        assert_eq!(pairwise_agreement(&[true, false]), Some(0.0));
        assert_eq!(pairwise_agreement(&[true]), None);
        assert_eq!(pairwise_agreement(&[]), None);
    }

    #[test]
    fn delta_matrix_examples() {
        // Uniform +0.05 bias centers to zero.
        let scores: BTreeMap<(ModelId, ModelId), f64> = [
            ((mid("j"), mid("a")), 0.65),
            ((mid("j"), mid("b")), 0.35),
        ]
        .into();
        let reference: BTreeMap<ModelId, f64> = [(mid("a"), 0.6), (mid("b"), 0.3)].into();
        let matrix = centered_delta_matrix(&scores, &reference).unwrap();
        assert!(matrix.cells[0].iter().all(|c| c.abs() < 1e-12));
        assert!((matrix.judge_bias[0] - 0.05).abs() < 1e-12);

        // 2x2 hand case: deltas (0.1, 0.0) -> centered (+0.05, -0.05).
        let scores: BTreeMap<(ModelId, ModelId), f64> = [
            ((mid("j"), mid("a")), 0.7),
            ((mid("j"), mid("b")), 0.3),
        ]
        .into();
        let matrix = centered_delta_matrix(&scores, &reference).unwrap();
        assert!((matrix.cell(0, 0) - 0.05).abs() < 1e-12);
        assert!((matrix.cell(0, 1) + 0.05).abs() < 1e-12);
        assert!((matrix.display_cell(0, 0) - 5.0).abs() < 1e-9);

        // Missing cell reported.
        let sparse: BTreeMap<(ModelId, ModelId), f64> = [((mid("j"), mid("a")), 0.7)].into();
        match centered_delta_matrix(&sparse, &reference).unwrap_err() {
            Error::Validation(msg) => assert!(msg.contains("(j, b)")),
            other => panic!("expected validation error, got {other}"),
        }
    }

    fn slice_dataset() -> Vec<BenchmarkInstance> {
        // 12 rubrics with token lengths 1..=12 and alternating polarity.
        (0..4)
            .map(|i| BenchmarkInstance {
                instance_id: format!("i{i}"),
                conversation: vec![Turn {
                    role: Role::User,
                    content: "q".into(),
                }],
                rubrics: (0..3)
                    .map(|k| {
                        let idx = i * 3 + k;
                        Rubric {
                            rubric_id: format!("r{k}"),
                            text: vec!["w"; idx + 1].join(" "),
                            weight: if idx % 4 == 0 { -1.0 } else { 1.0 },
                            axis: Some(if idx % 2 == 0 { "acc" } else { "comm" }.to_string()),
                            theme: None,
                            verifier: None,
                        }
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn length_buckets_are_near_equal_partition() {
        let dataset = slice_dataset();
        let buckets = slice_buckets(&dataset, SliceDimension::Length);
        assert_eq!(buckets.len(), 3);
        let sizes: Vec<usize> = buckets.iter().map(|(_, m)| m.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 12);
        assert!(sizes.iter().all(|s| *s == 4), "{sizes:?}");
        // Partition: no overlaps.
        let mut seen = BTreeSet::new();
        for (_, members) in &buckets {
            for m in members {
                assert!(seen.insert(m.clone()));
            }
        }
    }

    #[test]
    fn polarity_bucket_excludes_negative_rubrics() {
        let dataset = slice_dataset();
        let buckets = slice_buckets(&dataset, SliceDimension::Polarity);
        let default = &buckets[0].1;
        let positive = &buckets[1].1;
        assert_eq!(default.len(), 12);
        assert_eq!(positive.len(), 9); // idx 0, 4, 8 are negative
        assert!(positive.is_subset(default));
    }

    #[test]
    fn axis_buckets_partition_population() {
        let dataset = slice_dataset();
        let buckets = slice_buckets(&dataset, SliceDimension::Axis);
        let total: usize = buckets.iter().map(|(_, m)| m.len()).sum();
        assert_eq!(total, 12);
        assert_eq!(buckets.len(), 2);
    }

    #[test]
    fn committee_reference_counts_missing_units() {
        let committee = CommitteeSpec::new(vec![mid("j1"), mid("j2"), mid("j3")]).unwrap();
        let mut verdicts = Vec::new();
        for judge in ["j1", "j2", "j3"] {
            for inst in ["i1", "i2"] {
                verdicts.push(RubricVerdict {
                    judge: mid(judge),
                    generator: mid("g"),
                    instance_id: inst.into(),
                    rubric_id: "r0".into(),
                    met: judge != "j3",
                    paradigm: Paradigm::Sr,
                    raw_ref: None,
                });
            }
        }
        // j2 misses one unit.
        verdicts.retain(|v| !(v.judge == mid("j2") && v.instance_id == "i2"));
        let dataset = vec![BenchmarkInstance {
            instance_id: "i1".into(),
            conversation: vec![Turn {
                role: Role::User,
                content: "q".into(),
            }],
            rubrics: vec![Rubric {
                rubric_id: "r0".into(),
                text: "t".into(),
                weight: 1.0,
                axis: None,
                theme: None,
                verifier: None,
            }],
        }, BenchmarkInstance {
            instance_id: "i2".into(),
            conversation: vec![Turn {
                role: Role::User,
                content: "q".into(),
            }],
            rubrics: vec![Rubric {
                rubric_id: "r0".into(),
                text: "t".into(),
                weight: 1.0,
                axis: None,
                theme: None,
                verifier: None,
            }],
        }];
        let (reference, aggregated) =
            committee_reference(&verdicts, &committee, &dataset, ScoreMode::UnweightedFraction)
                .unwrap();
        // Unit i2 lacks j2 -> excluded; only i1 aggregated (2-1 majority met).
        assert_eq!(reference.rubric_refs.len(), 1);
        assert_eq!(reference.rubric_ref(&mid("g"), "i1", "r0"), Some(true));
        assert_eq!(aggregated.missing_per_member[&mid("j2")], 1);
        assert_eq!(aggregated.missing_per_member[&mid("j1")], 0);
        assert_eq!(
            reference.score_ref(&mid("g"), "i1"),
            Some(&Score::Fraction(Fraction::new(1, 1).unwrap()))
        );
    }

    #[test]
    fn partition_slices_preserve_overestimation_counts() {
        use crate::metrics::overestimation_rubric_table;
        use crate::store::Provenance;
        let dataset = slice_dataset();
        // Reference: every rubric failed by generator g; a couple met.
        let mut reference = ReferenceSet::new(Provenance::External, ScoreMode::UnweightedFraction);
        let mut verdicts = Vec::new();
        for (i, instance) in dataset.iter().enumerate() {
            for (k, rubric) in instance.rubrics.iter().enumerate() {
                let met_star = (i + k) % 5 == 0;
                reference.rubric_refs.insert(
                    (mid("g"), instance.instance_id.clone(), rubric.rubric_id.clone()),
                    met_star,
                );
                verdicts.push(RubricVerdict {
                    judge: mid("j"),
                    generator: mid("g"),
                    instance_id: instance.instance_id.clone(),
                    rubric_id: rubric.rubric_id.clone(),
                    met: (i * 3 + k) % 2 == 0,
                    paradigm: Paradigm::Sr,
                    raw_ref: None,
                });
            }
        }
        let judges: BTreeSet<ModelId> = [mid("j")].into();
        let gens: BTreeSet<ModelId> = [mid("g")].into();
        let unsliced = overestimation_rubric_table(&verdicts, &reference, &judges, &gens);
        let total = unsliced.rate(&mid("j"), &mid("g")).unwrap();

        for dimension in [SliceDimension::Length, SliceDimension::Axis, SliceDimension::Theme] {
            let mut num = 0;
            let mut den = 0;
            for (_, members) in slice_buckets(&dataset, dimension) {
                let bucket_verdicts: Vec<RubricVerdict> = verdicts
                    .iter()
                    .filter(|v| members.contains(&(v.instance_id.clone(), v.rubric_id.clone())))
                    .cloned()
                    .collect();
                let mut bucket_reference =
                    ReferenceSet::new(Provenance::External, ScoreMode::UnweightedFraction);
                for (unit, met) in &reference.rubric_refs {
                    if members.contains(&(unit.1.clone(), unit.2.clone())) {
                        bucket_reference.rubric_refs.insert(unit.clone(), *met);
                    }
                }
                let table =
                    overestimation_rubric_table(&bucket_verdicts, &bucket_reference, &judges, &gens);
                let rate = table.rate(&mid("j"), &mid("g")).unwrap();
                num += rate.numerator;
                den += rate.denominator;
            }
            assert_eq!((num, den), (total.numerator, total.denominator), "{dimension:?}");
        }
    }

    #[test]
    fn delta_matrix_invariant_under_judge_constant_shift() {
        let reference: BTreeMap<ModelId, f64> =
            [(mid("a"), 0.5), (mid("b"), 0.4), (mid("c"), 0.7)].into();
        let scores: BTreeMap<(ModelId, ModelId), f64> = [
            ((mid("j"), mid("a")), 0.55),
            ((mid("j"), mid("b")), 0.52),
            ((mid("j"), mid("c")), 0.61),
        ]
        .into();
        let shifted: BTreeMap<(ModelId, ModelId), f64> =
            scores.iter().map(|(k, v)| (k.clone(), v + 0.07)).collect();
        let base = centered_delta_matrix(&scores, &reference).unwrap();
        let moved = centered_delta_matrix(&shifted, &reference).unwrap();
        for g in 0..base.generators.len() {
            assert!((base.cell(0, g) - moved.cell(0, g)).abs() < 1e-12);
        }
        assert!((moved.judge_bias[0] - base.judge_bias[0] - 0.07).abs() < 1e-12);
    }

    proptest! {
        // Committee verdict equals the mode and is permutation-invariant.
        #[test]
        fn committee_is_permutation_invariant(votes in proptest::collection::vec(proptest::bool::ANY, 3..=7), seed in 0u64..100) {
            prop_assume!(votes.len() % 2 == 1);
            let verdict = committee_verdict(&votes).unwrap();
            let mut shuffled = votes.clone();
            // Deterministic pseudo-shuffle.
            let n = shuffled.len();
            for i in 0..n {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 7)) % n;
                shuffled.swap(i, j);
            }
            prop_assert_eq!(committee_verdict(&shuffled).unwrap(), verdict);
        }

        // Agreement is invariant under flipping every vote.
        #[test]
        fn agreement_flip_invariant(votes in proptest::collection::vec(proptest::bool::ANY, 2..12)) {
            let flipped: Vec<bool> = votes.iter().map(|v| !v).collect();
            prop_assert_eq!(pairwise_agreement(&votes), pairwise_agreement(&flipped));
        }
    }
}
