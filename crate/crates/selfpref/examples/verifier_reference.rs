//! Ground truth from programmatic checkers.
//!
//! Loads the bundled mini instruction-following fixture (20 instances, 40
//! verifiable rubrics, 3 generators), runs every rubric's checker over every
//! completion, and prints the exact reference verdicts and scores.
//!
//! Run: cargo run -p selfpref --example verifier_reference

use std::path::PathBuf;

use selfpref::store::{build_reference_from_verifiers, load_dataset, load_outputs};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_ifeval")
}

fn main() -> selfpref::Result<()> {
    let dataset = load_dataset(&fixtures().join("dataset.jsonl"))?;
    let outputs = load_outputs(&fixtures().join("outputs.jsonl"), Some(&dataset))?;
    println!(
        "loaded {} instances, {} rubrics, {} outputs",
        dataset.len(),
        dataset.iter().map(|i| i.rubrics.len()).sum::<usize>(),
        outputs.len()
    );

    let reference = build_reference_from_verifiers(&dataset, &outputs)?;
    println!("\nper-instance reference scores s* (met/total):\n");
    let generators: Vec<_> = {
        let mut g: Vec<_> = reference.score_refs.keys().map(|(g, _)| g.clone()).collect();
        g.sort();
        g.dedup();
        g
    };
    print!("{:<6}", "inst");
    for generator in &generators {
        print!(" {generator:>10}");
    }
    println!();
    for instance in &dataset {
        print!("{:<6}", instance.instance_id);
        for generator in &generators {
            let score = reference
                .score_ref(generator, &instance.instance_id)
                .expect("verifier reference is total");
            match score {
                selfpref::model::Score::Fraction(fr) => print!(" {:>10}", format!("{fr}")),
                selfpref::model::Score::Value(v) => print!(" {v:>10.3}"),
            }
        }
        println!();
    }

    println!("\nexample: the no-commas rubric on i01");
    for generator in &generators {
        let met = reference.rubric_ref(generator, "i01", "r1").unwrap();
        let completion = &outputs
            .iter()
            .find(|o| o.instance_id == "i01" && o.generator == *generator)
            .unwrap()
            .completion;
        println!("  {generator:<10} {:<5} {completion:?}", if met { "met" } else { "unmet" });
    }
    Ok(())
}
