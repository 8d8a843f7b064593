//! Inter-judge agreement as a bias filter.
//!
//! Computes pairwise agreement per verdict unit, then sweeps a retention
//! threshold: units below the threshold are dropped and HSPP is recomputed
//! on the survivors.
//!
//! Filtering helps when disagreement concentrates on the units that carry
//! the bias. This example builds such a population from three unit classes:
//! clear units every judge gets right, hard units every judge gets wrong
//! together, and contested units where judges disagree and the first
//! judge's self-preference lives. Raising the threshold strips out the
//! contested units and the measured HSPP falls back toward 1.
//!
//! Run: cargo run --release -p selfpref --example agreement_filtering

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfpref::ensemble::{agreement_sweep, AgreementLevel};
use selfpref::model::{
    partition_generators, BenchmarkInstance, FamilyRegistry, GeneratorPartition, ModelId,
    Paradigm, Role, Rubric, RubricVerdict, ScoreMode, Turn,
};
use selfpref::store::{Provenance, ReferenceSet};

fn main() -> selfpref::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let generators: Vec<ModelId> = (1..=6)
        .map(|g| ModelId::new(format!("m{g:02}")))
        .collect::<selfpref::Result<_>>()?;
    let judges: Vec<ModelId> = generators.iter().take(5).cloned().collect();
    let mut registry = FamilyRegistry::new();
    for (idx, generator) in generators.iter().enumerate() {
        registry.insert(generator.clone(), format!("fam{}", idx / 2))?;
    }
    let roster: BTreeSet<ModelId> = generators.iter().cloned().collect();
    let partitions: BTreeMap<ModelId, GeneratorPartition> = judges
        .iter()
        .map(|j| partition_generators(j, &roster, &registry).map(|p| (j.clone(), p)))
        .collect::<selfpref::Result<_>>()?;

    // 1200 single-rubric instances, every unit reference-failed. Classes
    // cycle: clear / contested / hard.
    let dataset: Vec<BenchmarkInstance> = (0..1200)
        .map(|i| BenchmarkInstance {
            instance_id: format!("i{i:04}"),
            conversation: vec![Turn { role: Role::User, content: "q".into() }],
            rubrics: vec![Rubric {
                rubric_id: "r1".into(),
                text: "criterion".into(),
                weight: 1.0,
                axis: None,
                theme: None,
                verifier: None,
            }],
        })
        .collect();
    let mut reference = ReferenceSet::new(Provenance::External, ScoreMode::UnweightedFraction);
    let mut verdicts = Vec::new();
    for (g_idx, generator) in generators.iter().enumerate() {
        for (i, instance) in dataset.iter().enumerate() {
            reference.rubric_refs.insert(
                (generator.clone(), instance.instance_id.clone(), "r1".into()),
                false,
            );
            for (j_idx, judge) in judges.iter().enumerate() {
                let p_met = match i % 3 {
                    0 => 0.02,                                        // clear
                    1 if j_idx == 0 && j_idx == g_idx => 0.9,         // contested + bias
                    1 => 0.35,                                        // contested
                    _ => 0.85,                                        // hard for everyone
                };
                verdicts.push(RubricVerdict {
                    judge: judge.clone(),
                    generator: generator.clone(),
                    instance_id: instance.instance_id.clone(),
                    rubric_id: "r1".into(),
                    met: rng.random_bool(p_met),
                    paradigm: Paradigm::Sr,
                    raw_ref: None,
                });
            }
        }
    }

    let judge_set: BTreeSet<ModelId> = judges.iter().cloned().collect();
    let thresholds: Vec<f64> = (0..=10).map(|i| 0.5 + i as f64 * 0.05).collect();
    let sweep = agreement_sweep(
        &verdicts,
        &judge_set,
        &thresholds,
        &reference,
        &partitions,
        &dataset,
        AgreementLevel::Unit,
    )?;

    println!("threshold sweep (mean rubric-level HSPP-self over 5 judges; m01 biased):\n");
    println!("{:>9} {:>11} {:>12} {:>9}", "threshold", "kept_units", "mean HSPP", "defined");
    for row in &sweep.rows {
        println!(
            "{:>9.2} {:>11} {:>12} {:>9}",
            row.threshold,
            row.kept_units,
            match row.mean_hspp_rubric {
                Some(v) => format!("{v:.4}"),
                None => "undef".to_string(),
            },
            row.judges_defined_rubric
        );
    }
    println!("\nkept-unit counts are monotone non-increasing; t = 1.0 keeps only");
    println!("units every judge agrees on, and the bias carried by the contested");
    println!("units drops out of the surviving HSPP.");
    Ok(())
}
