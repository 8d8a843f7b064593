//! HSPP across rubric-population slices.
//!
//! Buckets rubrics by polarity (all vs positive-weight only), by text-length
//! sextile pairs, and by axis/theme category, then recomputes the
//! rubric-level HSPP-self ratio per judge inside each bucket, with the
//! mean-judge and max-judge summary.
//!
//! Run: cargo run --release -p selfpref --example rubric_slices

use std::collections::{BTreeMap, BTreeSet};

use selfpref::ensemble::{slice_hspp, SliceDimension, SliceSpec};
use selfpref::model::{partition_generators, GeneratorPartition, ModelId};
use selfpref::sim::{JudgeBias, SimScenario};

fn main() -> selfpref::Result<()> {
    let scenario = SimScenario {
        n_instances: 4000,
        rubrics_per_instance: 4,
        fail_prob: 0.5,
        p_fp: 0.1,
        p_fn: 0.1,
        beta_self: 1.0,
        beta_fam: 1.0,
        family_sizes: vec![2, 2, 2],
        n_judges: 4,
        judge_overrides: BTreeMap::from([
            ("m02".to_string(), JudgeBias { beta_self: 1.8, beta_fam: 1.2 }),
        ]),
        seed: 23,
    };
    let output = selfpref::sim::simulate(&scenario)?;
    let _judges: BTreeSet<ModelId> = output.judges.iter().cloned().collect();
    let partitions: BTreeMap<ModelId, GeneratorPartition> = output
        .judges
        .iter()
        .map(|j| {
            partition_generators(j, &output.roster, &output.registry).map(|p| (j.clone(), p))
        })
        .collect::<selfpref::Result<_>>()?;

    for dimension in [
        SliceDimension::Polarity,
        SliceDimension::Length,
        SliceDimension::Axis,
        SliceDimension::Theme,
    ] {
        let report = slice_hspp(
            &output.verdicts,
            &output.reference,
            &output.dataset,
            SliceSpec { dimension },
            &partitions,
        );
        println!("--- slice: {dimension:?} ---");
        println!(
            "{:<16} {:>8} {:>11} {:>18}",
            "bucket", "rubrics", "mean judge", "max judge"
        );
        for bucket in &report.buckets {
            println!(
                "{:<16} {:>8} {:>11} {:>18}",
                bucket.bucket,
                bucket.rubric_count,
                match bucket.mean_judge {
                    Some(v) => format!("{v:.4}"),
                    None => "undef".into(),
                },
                match &bucket.max_judge {
                    Some((judge, v)) => format!("{} ({v:.4})", judge.as_str()),
                    None => "undef".into(),
                },
            );
        }
        println!();
    }
    Ok(())
}
