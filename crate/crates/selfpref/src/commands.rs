//! The five pipeline commands behind the CLI: judge, verify, metrics,
//! analyze, simulate. Each is an ordinary library function so the runnable
//! examples and the acceptance suite drive the same code paths as the
//! binary.
//!
//! Exit-code contract: 0 success (possibly with warnings), 1 usage or
//! configuration error, 2 data/validation error, 3 transport error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::ensemble::{
    agreement_sweep, centered_delta_matrix, committee_member_metrics, committee_verdicts,
    reference_system_scores, slice_hspp, system_scores, CommitteeSpec, SliceSpec,
};
use crate::error::{Error, Result};
use crate::judge::client::ChatClient;
use crate::judge::runner::{plan_units, render_unit_prompt, run_judging, ParadigmPlan, RunSummary};
use crate::metrics::{
    hspp_entry, instance_scores_from_rubric_verdicts, judge_score_tables, mipa, mra,
    overestimation_instance_table, overestimation_rubric_table, overestimation_subtypes,
    resolve_pairwise_runs, ComparisonSet, OverestimationTable,
};
use crate::model::{
    partition_generators, GeneratorPartition, InstanceScore, ModelId, Paradigm, ResolvedComparison,
    RubricVerdict,
};
use crate::report::{file_hash, write_csv, write_markdown, Cell, ReportProvenance, Table};
use crate::sim::{recovery_rows, simulate};
use crate::store::{
    build_reference_from_verifiers, load_dataset, load_outputs, load_reference, load_registry,
    read_verdicts, save_dataset, save_reference, save_registry, write_verdicts, ReferenceSet,
    VerdictLog, VerdictStore,
};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub dry_run: bool,
}

/// Maps an error onto the CLI exit-code contract.
pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 1,
        Error::Transport(_) => 3,
        _ => 2,
    }
}

fn out_dir(config: &RunConfig, overrides: &CliOverrides) -> PathBuf {
    overrides.out.clone().unwrap_or_else(|| config.out_dir())
}

fn deterministic(config: &RunConfig, overrides: &CliOverrides) -> bool {
    config.deterministic || overrides.deterministic
}

fn provenance(config_hash: &str, inputs: &[&Path]) -> ReportProvenance {
    ReportProvenance {
        config_hash: Some(config_hash.to_string()),
        input_hashes: inputs
            .iter()
            .filter_map(|p| file_hash(p).ok().map(|h| (p.display().to_string(), h)))
            .collect(),
    }
}

fn merged_logs(paths: &[PathBuf]) -> Result<VerdictLog> {
    let mut merged = VerdictLog::new();
    for path in paths {
        let log = read_verdicts(path)?;
        merged.append_all(log.records)?;
    }
    Ok(merged)
}

fn sanitize(part: &str) -> String {
    part.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

/// Runs (or dry-runs) the configured judging plan. Dry runs render every
/// pending prompt under `out/prompts/` without touching the network.
pub fn cmd_judge(
    config: &RunConfig,
    config_hash: &str,
    overrides: &CliOverrides,
) -> Result<RunSummary> {
    let dataset = load_dataset(config.require_dataset()?)?;
    let outputs = load_outputs(config.require_outputs()?, Some(&dataset))?;
    let plan_config = config.require_plan()?;
    if config.judges.is_empty() {
        return Err(Error::Config("config lists no judges".into()));
    }
    if config.generators.is_empty() {
        return Err(Error::Config("config lists no generators".into()));
    }
    let plan = ParadigmPlan {
        paradigm: plan_config.paradigm,
        flavor: plan_config.flavor,
        judges: config.judges.clone(),
        generators: config.generators.clone(),
        sampling: plan_config.sampling,
        retry: plan_config.retry,
        concurrency: plan_config.concurrency,
    };
    let out = out_dir(config, overrides);

    if overrides.dry_run {
        let units = plan_units(&plan, &dataset, &outputs)?;
        let dir = out.join("prompts");
        std::fs::create_dir_all(&dir)?;
        for (index, unit) in units.iter().enumerate() {
            let prompt = render_unit_prompt(&plan, unit, &dataset, &outputs)?;
            let name = format!(
                "{index:05}_{}_{}_{}.txt",
                plan.paradigm.to_string().to_lowercase(),
                sanitize(unit.judge.as_str()),
                sanitize(&unit.instance_id),
            );
            std::fs::write(dir.join(name), prompt)?;
        }
        println!(
            "dry-run: rendered {} prompts under {}",
            units.len(),
            dir.display()
        );
        return Ok(RunSummary {
            planned: units.len(),
            skipped: 0,
            done: 0,
            failed: 0,
        });
    }

    let endpoint = config
        .endpoint
        .as_ref()
        .ok_or_else(|| Error::Config("config is missing the endpoint section".into()))?;
    endpoint.validate_judges(&config.judges)?;
    let client = ChatClient::new(endpoint)?;
    let log_path = config
        .paths
        .logs
        .first()
        .cloned()
        .unwrap_or_else(|| out.join(format!("verdicts_{}.jsonl", plan.paradigm.to_string().to_lowercase())));
    let mut store = VerdictStore::open_append(&log_path)?;
    let summary = run_judging(
        &plan,
        &dataset,
        &outputs,
        &client,
        &mut store,
        deterministic(config, overrides),
    )?;
    println!(
        "judging: planned {} units, skipped {}, done {}, failed {} (config {config_hash})",
        summary.planned, summary.skipped, summary.done, summary.failed
    );
    if summary.failed > 0 {
        eprintln!("warning: {} units failed after retries", summary.failed);
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

/// Builds the programmatic-verifier reference for a verifiable dataset and
/// writes it to the configured reference path.
pub fn cmd_verify(
    config: &RunConfig,
    _config_hash: &str,
    overrides: &CliOverrides,
) -> Result<PathBuf> {
    let dataset = load_dataset(config.require_dataset()?)?;
    let outputs = load_outputs(config.require_outputs()?, Some(&dataset))?;
    let reference = build_reference_from_verifiers(&dataset, &outputs)?;
    let out = out_dir(config, overrides);
    let path = config
        .paths
        .reference
        .clone()
        .unwrap_or_else(|| out.join("reference.jsonl"));
    save_reference(&path, &reference)?;

    // Per-checker-kind pass counts.
    let mut per_kind: BTreeMap<&'static str, (u64, u64)> = BTreeMap::new();
    for instance in &dataset {
        for rubric in &instance.rubrics {
            let kind = rubric.verifier.as_ref().expect("verified above").kind();
            for output in outputs.iter().filter(|o| o.instance_id == instance.instance_id) {
                let met = reference
                    .rubric_ref(&output.generator, &instance.instance_id, &rubric.rubric_id)
                    .unwrap_or(false);
                let entry = per_kind.entry(kind).or_insert((0, 0));
                entry.1 += 1;
                if met {
                    entry.0 += 1;
                }
            }
        }
    }
    println!("reference written to {}", path.display());
    for (kind, (met, total)) in per_kind {
        println!("  {kind}: {met}/{total} met");
    }
    Ok(path)
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

/// Everything `cmd_metrics` computes, returned for programmatic use.
pub struct MetricsArtifacts {
    pub rubric_tables: BTreeMap<Paradigm, OverestimationTable>,
    pub instance_tables: BTreeMap<Paradigm, OverestimationTable>,
    pub out_dir: PathBuf,
}

fn judges_in_scope(config: &RunConfig, log: &VerdictLog) -> Vec<ModelId> {
    if !config.judges.is_empty() {
        return config.judges.clone();
    }
    let mut judges: BTreeSet<ModelId> = log.rubric_verdicts().map(|v| v.judge.clone()).collect();
    judges.extend(log.da_scores().filter_map(|s| s.scorer.as_judge().cloned()));
    judges.extend(log.pairwise_runs().map(|r| r.judge.clone()));
    judges.into_iter().collect()
}

fn generators_in_scope(config: &RunConfig, reference: &ReferenceSet) -> Vec<ModelId> {
    if !config.generators.is_empty() {
        return config.generators.clone();
    }
    let mut generators: BTreeSet<ModelId> =
        reference.rubric_refs.keys().map(|(g, _, _)| g.clone()).collect();
    generators.extend(reference.score_refs.keys().map(|(g, _)| g.clone()));
    generators.into_iter().collect()
}

/// Score tables per judge for one paradigm, derived from the log.
fn paradigm_score_tables(
    paradigm: Paradigm,
    log: &VerdictLog,
    dataset: &[crate::model::BenchmarkInstance],
    mode: crate::model::ScoreMode,
) -> Result<BTreeMap<ModelId, crate::metrics::ScoreTable>> {
    match paradigm {
        Paradigm::Sr | Paradigm::Ar => {
            let verdicts: Vec<RubricVerdict> = log
                .rubric_verdicts()
                .filter(|v| v.paradigm == paradigm)
                .cloned()
                .collect();
            let scored = instance_scores_from_rubric_verdicts(&verdicts, dataset, mode)?;
            Ok(judge_score_tables(&scored.scores))
        }
        Paradigm::Da => {
            let scores: Vec<InstanceScore> = log.da_scores().cloned().collect();
            Ok(judge_score_tables(&scores))
        }
        Paradigm::Pwc => Ok(BTreeMap::new()),
    }
}

/// Per-judge comparison sets for one paradigm: from scores for SR/AR/DA,
/// from double-run resolution for PWC.
fn paradigm_comparisons(
    paradigm: Paradigm,
    log: &VerdictLog,
    dataset: &[crate::model::BenchmarkInstance],
    mode: crate::model::ScoreMode,
) -> Result<BTreeMap<ModelId, ComparisonSet>> {
    if paradigm == Paradigm::Pwc {
        let runs: Vec<_> = log.pairwise_runs().cloned().collect();
        let (resolved, _unpaired) = resolve_pairwise_runs(&runs)?;
        let mut per_judge: BTreeMap<ModelId, Vec<ResolvedComparison>> = BTreeMap::new();
        for comparison in resolved {
            per_judge.entry(comparison.judge.clone()).or_default().push(comparison);
        }
        return per_judge
            .into_iter()
            .map(|(judge, comparisons)| {
                ComparisonSet::from_resolved(&comparisons).map(|set| (judge, set))
            })
            .collect();
    }
    let tables = paradigm_score_tables(paradigm, log, dataset, mode)?;
    Ok(tables
        .iter()
        .map(|(judge, table)| (judge.clone(), ComparisonSet::from_score_table(table)))
        .collect())
}

fn reference_comparisons(reference: &ReferenceSet) -> ComparisonSet {
    let table: crate::metrics::ScoreTable = reference
        .score_refs
        .iter()
        .map(|((generator, instance_id), score)| {
            ((generator.clone(), instance_id.clone()), *score)
        })
        .collect();
    ComparisonSet::from_score_table(&table)
}

fn partitions_for(
    judges: &[ModelId],
    generators: &[ModelId],
    registry_path: &Path,
) -> Result<BTreeMap<ModelId, GeneratorPartition>> {
    let registry = load_registry(registry_path)?;
    let mut roster: BTreeSet<ModelId> = generators.iter().cloned().collect();
    roster.extend(judges.iter().cloned());
    judges
        .iter()
        .map(|judge| partition_generators(judge, &roster, &registry).map(|p| (judge.clone(), p)))
        .collect()
}

/// Computes the full per-judge metric suite from logs and a reference, and
/// writes the CSV and Markdown reports.
pub fn cmd_metrics(
    config: &RunConfig,
    config_hash: &str,
    overrides: &CliOverrides,
) -> Result<MetricsArtifacts> {
    let dataset = load_dataset(config.require_dataset()?)?;
    let reference = load_reference(config.require_reference()?)?;
    reference.validate_consistency(&dataset)?;
    let log_paths = config.require_logs()?;
    let log = merged_logs(log_paths)?;
    let judges = judges_in_scope(config, &log);
    if judges.is_empty() {
        return Err(Error::Config("no judges in config or logs".into()));
    }
    let generators = generators_in_scope(config, &reference);
    let partitions = partitions_for(&judges, &generators, config.require_registry()?)?;
    let judge_set: BTreeSet<ModelId> = judges.iter().cloned().collect();
    let generator_set: BTreeSet<ModelId> = generators.iter().cloned().collect();
    let instances: Vec<String> = dataset.iter().map(|i| i.instance_id.clone()).collect();
    let ref_cmp = reference_comparisons(&reference);

    let out = out_dir(config, overrides);
    std::fs::create_dir_all(&out)?;
    let prov = {
        let mut inputs: Vec<&Path> = vec![config.require_reference()?];
        inputs.extend(log_paths.iter().map(|p| p.as_path()));
        provenance(config_hash, &inputs)
    };

    let paradigms_present: BTreeSet<Paradigm> = {
        let mut set: BTreeSet<Paradigm> = log.rubric_verdicts().map(|v| v.paradigm).collect();
        if log.da_scores().next().is_some() {
            set.insert(Paradigm::Da);
        }
        if log.pairwise_runs().next().is_some() {
            set.insert(Paradigm::Pwc);
        }
        set
    };

    // Rubric-level metrics (SR/AR only).
    let mut rubric_table_report = Table::new(&[
        "paradigm",
        "judge",
        "mra",
        "mra_matched",
        "mra_pairs",
        "mra_excluded",
        "hspp_rubric_self",
        "hspp_rubric_family",
        "self_rate",
        "self_failed_units",
        "stranger_mean_rate",
        "strangers_defined",
        "strangers_undefined",
        "family_mean_rate",
        "family_defined",
    ]);
    let mut overestimation_report = Table::new(&[
        "level",
        "paradigm",
        "judge",
        "generator",
        "rate",
        "numerator",
        "denominator",
        "excluded",
    ]);
    let mut rubric_tables = BTreeMap::new();
    for paradigm in [Paradigm::Sr, Paradigm::Ar] {
        if !paradigms_present.contains(&paradigm) {
            continue;
        }
        let verdicts: Vec<RubricVerdict> = log
            .rubric_verdicts()
            .filter(|v| v.paradigm == paradigm)
            .cloned()
            .collect();
        let table = overestimation_rubric_table(&verdicts, &reference, &judge_set, &generator_set);
        for (judge, partition) in &partitions {
            let entry = hspp_entry(judge, &table, partition);
            let accuracy = mra(judge, &verdicts, &reference, &generator_set);
            rubric_table_report.push(vec![
                paradigm.to_string().into(),
                judge.to_string().into(),
                Cell::opt_float(accuracy.value()),
                Cell::Int(accuracy.numerator),
                Cell::Int(accuracy.denominator),
                Cell::Int(accuracy.excluded),
                Cell::opt_float(entry.self_ratio),
                Cell::opt_float(entry.family_ratio),
                Cell::opt_float(entry.self_rate.value()),
                Cell::Int(entry.self_rate.denominator),
                Cell::opt_float(entry.stranger_mean.value()),
                Cell::Int(entry.stranger_mean.defined as u64),
                Cell::Int(entry.stranger_mean.undefined as u64),
                Cell::opt_float(entry.family_mean.value()),
                Cell::Int(entry.family_mean.defined as u64),
            ]);
        }
        for ((judge, generator), rate) in &table.cells {
            overestimation_report.push(vec![
                "rubric".into(),
                paradigm.to_string().into(),
                judge.to_string().into(),
                generator.to_string().into(),
                Cell::opt_float(rate.value()),
                Cell::Int(rate.numerator),
                Cell::Int(rate.denominator),
                Cell::Int(rate.excluded),
            ]);
        }
        rubric_tables.insert(paradigm, table);
    }

    // Instance-level metrics (all four paradigms).
    let mut instance_report = Table::new(&[
        "paradigm",
        "judge",
        "mipa",
        "mipa_matched",
        "mipa_compared",
        "mipa_excluded",
        "hspp_instance_self",
        "hspp_instance_family",
        "self_rate",
        "stranger_mean_rate",
    ]);
    let mut subtype_report = Table::new(&[
        "paradigm",
        "judge",
        "self_l2w_pct",
        "self_l2t_pct",
        "self_overestimations",
        "other_l2w_pct",
        "other_l2t_pct",
        "other_overestimations",
    ]);
    let mut instance_tables = BTreeMap::new();
    for paradigm in [Paradigm::Sr, Paradigm::Ar, Paradigm::Da, Paradigm::Pwc] {
        if !paradigms_present.contains(&paradigm) {
            continue;
        }
        let comparisons = paradigm_comparisons(paradigm, &log, &dataset, config.score_mode)?;
        if comparisons.is_empty() {
            continue;
        }
        let table =
            overestimation_instance_table(&comparisons, &ref_cmp, &generator_set, &instances);
        for (judge, partition) in &partitions {
            let Some(judge_cmp) = comparisons.get(judge) else {
                continue;
            };
            let entry = hspp_entry(judge, &table, partition);
            let accuracy = mipa(judge_cmp, &ref_cmp, &generator_set, &instances);
            instance_report.push(vec![
                paradigm.to_string().into(),
                judge.to_string().into(),
                Cell::opt_float(accuracy.value()),
                Cell::Int(accuracy.numerator),
                Cell::Int(accuracy.denominator),
                Cell::Int(accuracy.excluded),
                Cell::opt_float(entry.self_ratio),
                Cell::opt_float(entry.family_ratio),
                Cell::opt_float(entry.self_rate.value()),
                Cell::opt_float(entry.stranger_mean.value()),
            ]);

            // Table-3-shaped subtype breakdown: self vs all other generators.
            let self_breakdown = overestimation_subtypes(
                judge_cmp, &ref_cmp, judge, &generator_set, &instances,
            );
            let mut other = crate::metrics::SubtypeBreakdown::default();
            for generator in &generator_set {
                if generator == judge {
                    continue;
                }
                let b = overestimation_subtypes(
                    judge_cmp, &ref_cmp, generator, &generator_set, &instances,
                );
                other.loss_to_win += b.loss_to_win;
                other.loss_to_tie += b.loss_to_tie;
            }
            let pct = |share: Option<(f64, f64)>, pick_win: bool| match share {
                Some((w, t)) => Cell::Float(100.0 * if pick_win { w } else { t }),
                None => Cell::Undef,
            };
            subtype_report.push(vec![
                paradigm.to_string().into(),
                judge.to_string().into(),
                pct(self_breakdown.shares(), true),
                pct(self_breakdown.shares(), false),
                Cell::Int(self_breakdown.total()),
                pct(other.shares(), true),
                pct(other.shares(), false),
                Cell::Int(other.total()),
            ]);
        }
        for ((judge, generator), rate) in &table.cells {
            overestimation_report.push(vec![
                "instance".into(),
                paradigm.to_string().into(),
                judge.to_string().into(),
                generator.to_string().into(),
                Cell::opt_float(rate.value()),
                Cell::Int(rate.numerator),
                Cell::Int(rate.denominator),
                Cell::Int(rate.excluded),
            ]);
        }
        instance_tables.insert(paradigm, table);
    }

    write_csv(&out.join("metrics_rubric.csv"), &rubric_table_report)?;
    write_csv(&out.join("metrics_instance.csv"), &instance_report)?;
    write_csv(&out.join("overestimation.csv"), &overestimation_report)?;
    write_csv(&out.join("subtypes.csv"), &subtype_report)?;
    write_markdown(
        &out.join("metrics.md"),
        "Judge metrics",
        &[
            ("Rubric-level metrics per judge", &rubric_table_report),
            ("Instance-level metrics per judge", &instance_report),
            ("Overestimation subtypes (l2w / l2t)", &subtype_report),
        ],
        &prov,
    )?;
    println!("metrics reports written under {}", out.display());
    Ok(MetricsArtifacts {
        rubric_tables,
        instance_tables,
        out_dir: out,
    })
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

pub struct AnalyzeArtifacts {
    pub out_dir: PathBuf,
}

/// Committee mitigation, agreement-threshold sweep, centered delta matrix,
/// and slice reports, all over the SR verdicts in the logs.
pub fn cmd_analyze(
    config: &RunConfig,
    config_hash: &str,
    overrides: &CliOverrides,
) -> Result<AnalyzeArtifacts> {
    let dataset = load_dataset(config.require_dataset()?)?;
    let reference = load_reference(config.require_reference()?)?;
    let log_paths = config.require_logs()?;
    let log = merged_logs(log_paths)?;
    let judges = judges_in_scope(config, &log);
    if judges.len() < 2 {
        return Err(Error::Config(format!(
            "analysis needs at least two judges, found {}",
            judges.len()
        )));
    }
    let generators = generators_in_scope(config, &reference);
    let partitions = partitions_for(&judges, &generators, config.require_registry()?)?;
    let judge_set: BTreeSet<ModelId> = judges.iter().cloned().collect();
    let generator_set: BTreeSet<ModelId> = generators.iter().cloned().collect();
    let sr_verdicts: Vec<RubricVerdict> = log
        .rubric_verdicts()
        .filter(|v| v.paradigm == Paradigm::Sr)
        .cloned()
        .collect();
    if sr_verdicts.is_empty() {
        return Err(Error::Config("analysis needs SR verdicts in the logs".into()));
    }

    let out = out_dir(config, overrides);
    std::fs::create_dir_all(&out)?;
    let prov = {
        let mut inputs: Vec<&Path> = vec![config.require_reference()?];
        inputs.extend(log_paths.iter().map(|p| p.as_path()));
        provenance(config_hash, &inputs)
    };
    let mut md_tables: Vec<(String, Table)> = Vec::new();

    // Committee before/after.
    if !config.committee.is_empty() {
        let committee = CommitteeSpec::new(config.committee.clone())?;
        let aggregated = committee_verdicts(&sr_verdicts, &committee)?;
        let table =
            overestimation_rubric_table(&sr_verdicts, &reference, &judge_set, &generator_set);
        let mut committee_report = Table::new(&[
            "member",
            "individual_mra",
            "committee_mra",
            "individual_hspp_self",
            "committee_hspp_self",
            "missing_units",
        ]);
        for member in &committee.members {
            let Some(partition) = partitions.get(member) else {
                return Err(Error::Config(format!(
                    "committee member '{member}' is not an analyzed judge"
                )));
            };
            let individual_entry = hspp_entry(member, &table, partition);
            let individual_mra = mra(member, &sr_verdicts, &reference, &generator_set);
            let committee_metrics = committee_member_metrics(
                member,
                &aggregated,
                &reference,
                partition,
                &generator_set,
            );
            committee_report.push(vec![
                member.to_string().into(),
                Cell::opt_float(individual_mra.value()),
                Cell::opt_float(committee_metrics.mra.value()),
                Cell::opt_float(individual_entry.self_ratio),
                Cell::opt_float(committee_metrics.hspp.self_ratio),
                Cell::Int(aggregated.missing_per_member[member]),
            ]);
        }
        write_csv(&out.join("committee.csv"), &committee_report)?;
        md_tables.push(("Committee mitigation (individual vs committee-aggregated)".into(), committee_report));
    }

    // Agreement-threshold sweep.
    if !config.thresholds.is_empty() {
        let sweep = agreement_sweep(
            &sr_verdicts,
            &judge_set,
            &config.thresholds,
            &reference,
            &partitions,
            &dataset,
            config.agreement_level,
        )?;
        let mut sweep_report = Table::new(&[
            "threshold",
            "kept_units",
            "mean_hspp_rubric",
            "judges_defined_rubric",
            "mean_hspp_instance",
            "judges_defined_instance",
        ]);
        for row in &sweep.rows {
            sweep_report.push(vec![
                Cell::Float(row.threshold),
                Cell::Int(row.kept_units as u64),
                Cell::opt_float(row.mean_hspp_rubric),
                Cell::Int(row.judges_defined_rubric as u64),
                Cell::opt_float(row.mean_hspp_instance),
                Cell::Int(row.judges_defined_instance as u64),
            ]);
        }
        write_csv(&out.join("agreement_sweep.csv"), &sweep_report)?;
        md_tables.push(("Agreement-threshold sweep".into(), sweep_report));
    }

    // Centered delta matrix from SR-derived instance scores.
    let scored =
        instance_scores_from_rubric_verdicts(&sr_verdicts, &dataset, reference.score_mode)?;
    let tables = judge_score_tables(&scored.scores);
    let sys = system_scores(&tables);
    let ref_sys = reference_system_scores(&reference);
    match centered_delta_matrix(&sys, &ref_sys) {
        Ok(matrix) => {
            let mut columns = vec!["judge".to_string()];
            columns.extend(matrix.generators.iter().map(|g| g.to_string()));
            let mut matrix_report = Table {
                columns,
                rows: Vec::new(),
            };
            for (j, judge) in matrix.judges.iter().enumerate() {
                let mut row: Vec<Cell> = vec![judge.to_string().into()];
                row.extend(
                    (0..matrix.generators.len()).map(|g| Cell::Float(matrix.display_cell(j, g))),
                );
                matrix_report.push(row);
            }
            write_csv(&out.join("delta_matrix.csv"), &matrix_report)?;
            md_tables.push(("Centered score delta matrix (x100)".into(), matrix_report));
        }
        Err(Error::Validation(msg)) => {
            eprintln!("warning: delta matrix skipped: {msg}");
        }
        Err(other) => return Err(other),
    }

    // Slice analyses.
    for dimension in &config.slices {
        let report = slice_hspp(
            &sr_verdicts,
            &reference,
            &dataset,
            SliceSpec { dimension: *dimension },
            &partitions,
        );
        let mut slice_report = Table::new(&[
            "bucket",
            "rubric_count",
            "judge",
            "hspp_rubric_self",
        ]);
        let mut summary = Table::new(&["bucket", "mean_judge", "max_judge", "max_judge_hspp"]);
        for bucket in &report.buckets {
            for (judge, ratio) in &bucket.per_judge {
                slice_report.push(vec![
                    bucket.bucket.clone().into(),
                    Cell::Int(bucket.rubric_count as u64),
                    judge.to_string().into(),
                    Cell::opt_float(*ratio),
                ]);
            }
            summary.push(vec![
                bucket.bucket.clone().into(),
                Cell::opt_float(bucket.mean_judge),
                bucket
                    .max_judge
                    .as_ref()
                    .map(|(j, _)| Cell::Text(j.to_string()))
                    .unwrap_or(Cell::Undef),
                Cell::opt_float(bucket.max_judge.as_ref().map(|(_, r)| *r)),
            ]);
        }
        let tag = format!("{dimension:?}").to_lowercase();
        write_csv(&out.join(format!("slices_{tag}.csv")), &slice_report)?;
        write_csv(&out.join(format!("slices_{tag}_summary.csv")), &summary)?;
        md_tables.push((format!("Slice: {tag}"), summary));
    }

    let borrowed: Vec<(&str, &Table)> = md_tables
        .iter()
        .map(|(name, table)| (name.as_str(), table))
        .collect();
    write_markdown(&out.join("analysis.md"), "Ensemble analyses", &borrowed, &prov)?;
    println!("analysis reports written under {}", out.display());
    Ok(AnalyzeArtifacts { out_dir: out })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub struct SimulateArtifacts {
    pub out_dir: PathBuf,
    pub dataset_path: PathBuf,
    pub registry_path: PathBuf,
    pub reference_path: PathBuf,
    pub verdicts_path: PathBuf,
    pub bias_detected: Vec<(ModelId, bool)>,
}

/// Generates a synthetic corpus, writes it in the standard formats, and
/// reports estimator recovery against the closed-form oracle.
pub fn cmd_simulate(
    config: &RunConfig,
    config_hash: &str,
    overrides: &CliOverrides,
) -> Result<SimulateArtifacts> {
    let mut scenario = config.require_scenario()?.clone();
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    let output = simulate(&scenario)?;
    let out = out_dir(config, overrides);
    std::fs::create_dir_all(&out)?;

    let dataset_path = out.join("sim_dataset.jsonl");
    save_dataset(&dataset_path, &output.dataset)?;
    let registry_path = out.join("sim_registry.json");
    save_registry(&registry_path, &output.registry)?;
    let reference_path = out.join("sim_reference.jsonl");
    save_reference(&reference_path, &output.reference)?;
    let verdicts_path = out.join("sim_verdicts.jsonl");
    let mut log = VerdictLog::new();
    log.append_all(
        output
            .verdicts
            .iter()
            .map(|v| crate::store::LogRecord::new(crate::store::LogEntry::Rubric(v.clone())))
            .collect(),
    )?;
    write_verdicts(&verdicts_path, &log)?;

    let rows = recovery_rows(&scenario, &output)?;
    let mut recovery_report = Table::new(&[
        "judge",
        "estimate_self",
        "oracle_self",
        "z_self",
        "estimate_family",
        "oracle_family",
        "z_family",
        "bias_detected",
    ]);
    let mut bias_detected = Vec::new();
    for row in &rows {
        recovery_report.push(vec![
            row.judge.to_string().into(),
            Cell::opt_float(row.estimate_self),
            Cell::Float(row.oracle_self),
            Cell::opt_float(row.z_self),
            Cell::opt_float(row.estimate_family),
            Cell::opt_float(row.oracle_family),
            Cell::opt_float(row.z_family),
            Cell::Text(row.bias_detected.to_string()),
        ]);
        bias_detected.push((row.judge.clone(), row.bias_detected));
    }
    write_csv(&out.join("recovery.csv"), &recovery_report)?;
    write_markdown(
        &out.join("recovery.md"),
        "Simulator recovery",
        &[("Estimate vs oracle", &recovery_report)],
        &provenance(config_hash, &[&dataset_path, &verdicts_path, &reference_path]),
    )?;
    println!(
        "simulated corpus ({} instances, {} generators, {} judges) written under {}",
        scenario.n_instances,
        scenario.n_generators(),
        output.judges.len(),
        out.display()
    );
    Ok(SimulateArtifacts {
        out_dir: out,
        dataset_path,
        registry_path,
        reference_path,
        verdicts_path,
        bias_detected,
    })
}
