//! The full metric suite on a multi-judge corpus.
//!
//! Simulates five judges over six generators (one judge biased toward its
//! own outputs), then computes rubric accuracy (MRA), instance pairwise
//! accuracy (MIPA), per-generator overestimation rates, and the self/family
//! HSPP ratios that separate bias from mere leniency.
//!
//! Run: cargo run --release -p selfpref --example judge_metrics

use std::collections::{BTreeMap, BTreeSet};

use selfpref::metrics::{
    hspp_entry, instance_scores_from_rubric_verdicts, judge_score_tables, mipa, mra,
    overestimation_rubric_table, ComparisonSet, ScoreTable,
};
use selfpref::model::{partition_generators, ModelId, ScoreMode};
use selfpref::sim::{JudgeBias, SimScenario};

fn main() -> selfpref::Result<()> {
    let scenario = SimScenario {
        n_instances: 2000,
        rubrics_per_instance: 3,
        fail_prob: 0.5,
        p_fp: 0.1,
        p_fn: 0.1,
        beta_self: 1.0,
        beta_fam: 1.0,
        family_sizes: vec![2, 2, 2],
        n_judges: 5,
        judge_overrides: BTreeMap::from([
            ("m01".to_string(), JudgeBias { beta_self: 1.5, beta_fam: 1.3 }),
        ]),
        seed: 11,
    };
    let output = selfpref::sim::simulate(&scenario)?;
    let judges: BTreeSet<ModelId> = output.judges.iter().cloned().collect();

    // Rubric level: overestimation + rubric accuracy + HSPP ratios.
    let table =
        overestimation_rubric_table(&output.verdicts, &output.reference, &judges, &output.roster);
    println!("rubric-level metrics (judge m01 is the biased one):\n");
    println!(
        "{:<6} {:>7} {:>11} {:>11} {:>11}",
        "judge", "MRA", "self_rate", "HSPP_self", "HSPP_fam"
    );
    for judge in &output.judges {
        let partition = partition_generators(judge, &output.roster, &output.registry)?;
        let entry = hspp_entry(judge, &table, &partition);
        let accuracy = mra(judge, &output.verdicts, &output.reference, &output.roster);
        println!(
            "{:<6} {:>7.4} {:>11.4} {:>11} {:>11}",
            judge.as_str(),
            accuracy.value().unwrap_or(f64::NAN),
            entry.self_rate.value().unwrap_or(f64::NAN),
            fmt(entry.self_ratio),
            fmt(entry.family_ratio),
        );
    }

    // Instance level: scores from the same verdicts, pairwise concordance.
    let scored = instance_scores_from_rubric_verdicts(
        &output.verdicts,
        &output.dataset,
        ScoreMode::UnweightedFraction,
    )?;
    let tables = judge_score_tables(&scored.scores);
    let ref_table: ScoreTable = output
        .reference
        .score_refs
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    let ref_cmp = ComparisonSet::from_score_table(&ref_table);
    let instances: Vec<String> = output.dataset.iter().map(|i| i.instance_id.clone()).collect();
    println!("\ninstance-level pairwise accuracy (ties included):\n");
    for judge in &output.judges {
        let cmp = ComparisonSet::from_score_table(&tables[judge]);
        let accuracy = mipa(&cmp, &ref_cmp, &output.roster, &instances);
        println!(
            "  {:<6} MIPA {:.4}  ({} of {} comparisons, {} excluded)",
            judge.as_str(),
            accuracy.value().unwrap_or(f64::NAN),
            accuracy.numerator,
            accuracy.denominator,
            accuracy.excluded
        );
    }

    println!("\nper-generator overestimation rates for m01 (its own outputs stand out):");
    for generator in &output.roster {
        let rate = table.rate(&output.judges[0], generator).unwrap();
        println!(
            "  m01 -> {:<5} {:.4}  ({}/{} reference-failed rubrics)",
            generator.as_str(),
            rate.value().unwrap_or(f64::NAN),
            rate.numerator,
            rate.denominator
        );
    }
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "undef".to_string(),
    }
}
