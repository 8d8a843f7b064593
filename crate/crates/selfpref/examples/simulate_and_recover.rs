//! Estimator calibration on synthetic judges.
//!
//! Simulates a judge population with known self- and family-bias
//! multipliers, runs the real metric stack over the generated verdicts, and
//! compares the recovered HSPP ratios against the closed-form oracle.
//!
//! Run: cargo run --release -p selfpref --example simulate_and_recover

use std::collections::BTreeMap;

use selfpref::sim::{recovery_experiment, JudgeBias, SimScenario};

fn main() -> selfpref::Result<()> {
    println!("=== Simulator recovery: estimate vs closed-form oracle ===\n");

    let scenario = SimScenario {
        n_instances: 4000,
        rubrics_per_instance: 5,
        fail_prob: 0.5,
        p_fp: 0.1,
        p_fn: 0.1,
        beta_self: 1.0,
        beta_fam: 1.0,
        family_sizes: vec![2, 2],
        n_judges: 2,
        judge_overrides: BTreeMap::from([
            ("m01".to_string(), JudgeBias { beta_self: 1.5, beta_fam: 1.2 }),
        ]),
        seed: 7,
    };
    println!(
        "scenario: {} instances x {} rubrics, q={}, p_fp={}, seed={}",
        scenario.n_instances,
        scenario.rubrics_per_instance,
        scenario.fail_prob,
        scenario.p_fp,
        scenario.seed
    );
    println!("judge m01 is biased (beta_self=1.5, beta_fam=1.2); m02 is honest\n");

    let report = recovery_experiment(&scenario)?;
    println!(
        "{:<6} {:>9} {:>9} {:>7} {:>9} {:>9} {:>7}  bias?",
        "judge", "est_self", "oracle", "z", "est_fam", "oracle", "z"
    );
    for row in &report.rows {
        println!(
            "{:<6} {:>9} {:>9.3} {:>7} {:>9} {:>9} {:>7}  {}",
            row.judge.as_str(),
            fmt_opt(row.estimate_self),
            row.oracle_self,
            fmt_opt(row.z_self),
            fmt_opt(row.estimate_family),
            fmt_opt(row.oracle_family),
            fmt_opt(row.z_family),
            if row.bias_detected { "detected" } else { "-" }
        );
    }

    println!("\nIdentical seeds reproduce identical verdicts:");
    let a = selfpref::sim::simulate(&scenario)?;
    let b = selfpref::sim::simulate(&scenario)?;
    println!("  rerun byte-equal: {}", a.verdicts == b.verdicts);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.3}"),
        None => "undef".to_string(),
    }
}
