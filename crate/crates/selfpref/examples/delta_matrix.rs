//! Centered score delta matrix.
//!
//! For each judge and generator the cell shows how far the judge's
//! system-level score sits from the reference, after subtracting the judge's
//! mean deviation. Centering cancels overall leniency or strictness, so the
//! diagonal exposes self-preference directly.
//!
//! Run: cargo run --release -p selfpref --example delta_matrix

use std::collections::BTreeMap;

use selfpref::ensemble::{centered_delta_matrix, reference_system_scores, system_scores};
use selfpref::metrics::{instance_scores_from_rubric_verdicts, judge_score_tables};
use selfpref::model::ScoreMode;
use selfpref::sim::{JudgeBias, SimScenario};

fn main() -> selfpref::Result<()> {
    let scenario = SimScenario {
        n_instances: 3000,
        rubrics_per_instance: 3,
        fail_prob: 0.5,
        p_fp: 0.12,
        p_fn: 0.12,
        beta_self: 1.0,
        beta_fam: 1.0,
        family_sizes: vec![2, 2, 2],
        n_judges: 6,
        judge_overrides: BTreeMap::from([
            ("m01".to_string(), JudgeBias { beta_self: 2.0, beta_fam: 1.5 }),
            ("m03".to_string(), JudgeBias { beta_self: 1.6, beta_fam: 1.0 }),
        ]),
        seed: 17,
    };
    let output = selfpref::sim::simulate(&scenario)?;
    let scored = instance_scores_from_rubric_verdicts(
        &output.verdicts,
        &output.dataset,
        ScoreMode::UnweightedFraction,
    )?;
    let tables = judge_score_tables(&scored.scores);
    let sys = system_scores(&tables);
    let ref_sys = reference_system_scores(&output.reference);
    let matrix = centered_delta_matrix(&sys, &ref_sys)?;

    println!("centered score deltas x100 (rows: judges, cols: generators)");
    println!("m01 and m03 are biased toward their own outputs\n");
    print!("{:<6}", "");
    for generator in &matrix.generators {
        print!(" {:>7}", generator.as_str());
    }
    println!("  row_sum");
    for (j, judge) in matrix.judges.iter().enumerate() {
        print!("{:<6}", judge.as_str());
        let mut row_sum = 0.0;
        for g in 0..matrix.generators.len() {
            let cell = matrix.display_cell(j, g);
            row_sum += cell;
            let marker = if matrix.generators[g] == *judge { "*" } else { "" };
            print!(" {:>6.2}{marker}", cell);
            if marker.is_empty() {
                print!(" ");
            }
        }
        println!("  {row_sum:>7.1e}");
    }
    println!("\n(*) self-evaluation cell; rows sum to zero by construction.");
    println!("judge mean bias (subtracted): {:?}",
        matrix
            .judge_bias
            .iter()
            .map(|b| format!("{:+.3}", b))
            .collect::<Vec<_>>());
    Ok(())
}
