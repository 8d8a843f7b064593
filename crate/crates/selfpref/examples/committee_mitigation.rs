//! Majority-vote committees as a bias mitigation.
//!
//! Five judges vote on every rubric; the ensemble's majority verdict is then
//! scored as each member's prediction. The biased member's self-preference
//! shrinks once its vote is just one of five, while accuracy goes up for
//! everyone.
//!
//! Run: cargo run --release -p selfpref --example committee_mitigation

use std::collections::{BTreeMap, BTreeSet};

use selfpref::ensemble::{committee_member_metrics, committee_verdicts, CommitteeSpec};
use selfpref::metrics::{hspp_entry, mra, overestimation_rubric_table};
use selfpref::model::{partition_generators, ModelId};
use selfpref::sim::{JudgeBias, SimScenario};

fn main() -> selfpref::Result<()> {
    let scenario = SimScenario {
        n_instances: 4000,
        rubrics_per_instance: 3,
        fail_prob: 0.5,
        p_fp: 0.1,
        p_fn: 0.1,
        beta_self: 1.0,
        beta_fam: 1.0,
        family_sizes: vec![2, 2, 2],
        n_judges: 5,
        judge_overrides: BTreeMap::from([
            ("m01".to_string(), JudgeBias { beta_self: 2.0, beta_fam: 1.0 }),
        ]),
        seed: 4242,
    };
    let output = selfpref::sim::simulate(&scenario)?;
    let judges: BTreeSet<ModelId> = output.judges.iter().cloned().collect();
    let committee = CommitteeSpec::new(output.judges.clone())?;
    let aggregated = committee_verdicts(&output.verdicts, &committee)?;
    let individual_table =
        overestimation_rubric_table(&output.verdicts, &output.reference, &judges, &output.roster);

    println!("individual vs committee-aggregated metrics (m01 has beta_self = 2.0):\n");
    println!(
        "{:<6} {:>10} {:>13} {:>12} {:>15}",
        "member", "MRA", "committee MRA", "HSPP self", "committee HSPP"
    );
    for member in &committee.members {
        let partition = partition_generators(member, &output.roster, &output.registry)?;
        let individual_mra = mra(member, &output.verdicts, &output.reference, &output.roster);
        let individual_entry = hspp_entry(member, &individual_table, &partition);
        let committee_metrics = committee_member_metrics(
            member,
            &aggregated,
            &output.reference,
            &partition,
            &output.roster,
        );
        println!(
            "{:<6} {:>10.4} {:>13.4} {:>12} {:>15}",
            member.as_str(),
            individual_mra.value().unwrap_or(f64::NAN),
            committee_metrics.mra.value().unwrap_or(f64::NAN),
            fmt(individual_entry.self_ratio),
            fmt(committee_metrics.hspp.self_ratio),
        );
    }
    println!("\nthe committee shares one prediction, so its MRA column repeats;");
    println!("the HSPP column is member-specific because each member has its own");
    println!("self/family/stranger partition.");
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "undef".to_string(),
    }
}
