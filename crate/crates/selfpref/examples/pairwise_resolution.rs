//! Position-bias mitigation by double-run resolution.
//!
//! Every pairwise comparison runs twice with the presentation order swapped.
//! This example prints the full resolution table for the nine possible
//! (run, swapped run) outcome pairs, then resolves a small judged log and
//! derives instance-level overestimation from the resolved outcomes.
//!
//! Run: cargo run -p selfpref --example pairwise_resolution

use std::collections::BTreeSet;

use selfpref::judge::parse::resolve_pairwise;
use selfpref::metrics::{overestimation_instance, resolve_pairwise_runs, ComparisonSet, ScoreTable};
use selfpref::model::{Fraction, ModelId, Outcome, PairwiseRun, RunOutcome, Score};

fn main() -> selfpref::Result<()> {
    println!("resolution of (run A-first, run B-first) outcome pairs, for generator G:\n");
    println!("{:<14} {:<14} resolved", "run (G, G')", "run (G', G)");
    for a in [RunOutcome::First, RunOutcome::Second, RunOutcome::Tie] {
        for b in [RunOutcome::First, RunOutcome::Second, RunOutcome::Tie] {
            let resolved = resolve_pairwise(a, b);
            println!(
                "{:<14} {:<14} {}",
                format!("{a:?}"),
                format!("{b:?}"),
                match resolved {
                    Outcome::Win => "G wins",
                    Outcome::Tie => "tie",
                    Outcome::Loss => "G loses",
                }
            );
        }
    }
    println!("\nnon-tie runs stand; disagreements and double ties resolve to a tie,");
    println!("and swapping the pair flips the sign (antisymmetry).\n");

    // A tiny judged log: both orders over two instances.
    let judge = ModelId::new("judge-1")?;
    let a = ModelId::new("gen-a")?;
    let b = ModelId::new("gen-b")?;
    let runs = vec![
        run(&judge, &a, &b, "i1", RunOutcome::First),
        run(&judge, &b, &a, "i1", RunOutcome::Tie),
        run(&judge, &a, &b, "i2", RunOutcome::Second),
        run(&judge, &b, &a, "i2", RunOutcome::First),
    ];
    let (resolved, unpaired) = resolve_pairwise_runs(&runs)?;
    println!("resolved comparisons ({} pairs, {unpaired} unpaired):", resolved.len());
    for comparison in &resolved {
        println!(
            "  {} vs {} on {}: w = {:?}",
            comparison.generator.as_str(),
            comparison.opponent.as_str(),
            comparison.instance_id,
            comparison.w
        );
    }

    // Reference says gen-a loses both instances; the judge's resolved
    // outcomes overestimate it on i1 (tie) and agree on i2 (loss).
    let reference: ScoreTable = [
        ((a.clone(), "i1".to_string()), Score::Fraction(Fraction::new(0, 2)?)),
        ((b.clone(), "i1".to_string()), Score::Fraction(Fraction::new(2, 2)?)),
        ((a.clone(), "i2".to_string()), Score::Fraction(Fraction::new(1, 2)?)),
        ((b.clone(), "i2".to_string()), Score::Fraction(Fraction::new(2, 2)?)),
    ]
    .into_iter()
    .collect();
    let ref_cmp = ComparisonSet::from_score_table(&reference);
    let judge_cmp = ComparisonSet::from_resolved(&resolved)?;
    let roster: BTreeSet<ModelId> = [a.clone(), b.clone()].into();
    let instances = vec!["i1".to_string(), "i2".to_string()];
    let rate = overestimation_instance(&judge_cmp, &ref_cmp, &a, &roster, &instances);
    println!(
        "\ninstance-level overestimation of gen-a: {}/{} reference losses ruled better",
        rate.numerator, rate.denominator
    );
    Ok(())
}

fn run(judge: &ModelId, first: &ModelId, second: &ModelId, inst: &str, outcome: RunOutcome) -> PairwiseRun {
    PairwiseRun {
        judge: judge.clone(),
        generator_first: first.clone(),
        generator_second: second.clone(),
        instance_id: inst.into(),
        outcome,
    }
}
