//! The four judging prompts, rendered.
//!
//! Takes one fixture instance and prints the single-rubric (SR), all-rubrics
//! (AR), direct-assessment (DA), and pairwise-comparison (PWC) prompts
//! exactly as a judge endpoint would receive them, plus each template's
//! stable id and the prompt hash recorded in verdict logs.
//!
//! Run: cargo run -p selfpref --example prompt_rendering

use std::path::PathBuf;

use selfpref::judge::prompt::{
    prompt_hash, render_prompt, template_id, PromptInput, TemplateFlavor,
};
use selfpref::model::{ModelId, Paradigm, Rubric};
use selfpref::store::{load_dataset, load_outputs};

fn main() -> selfpref::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_ifeval");
    let dataset = load_dataset(&fixtures.join("dataset.jsonl"))?;
    let outputs = load_outputs(&fixtures.join("outputs.jsonl"), Some(&dataset))?;
    let instance = &dataset[0];
    let gen_a = ModelId::new("nimbus-7b")?;
    let gen_b = ModelId::new("nimbus-1b")?;
    let completion = |generator: &ModelId| {
        outputs
            .iter()
            .find(|o| o.instance_id == instance.instance_id && o.generator == *generator)
            .map(|o| o.completion.as_str())
            .expect("fixture outputs are complete")
    };
    let one_rubric = [&instance.rubrics[0]];
    let all_rubrics: Vec<&Rubric> = instance.rubrics.iter().collect();

    let renders = [
        (
            Paradigm::Sr,
            render_prompt(
                Paradigm::Sr,
                TemplateFlavor::IfEval,
                instance,
                PromptInput::Single { completion: completion(&gen_a) },
                &one_rubric,
            )?,
            template_id(Paradigm::Sr, TemplateFlavor::IfEval),
        ),
        (
            Paradigm::Ar,
            render_prompt(
                Paradigm::Ar,
                TemplateFlavor::IfEval,
                instance,
                PromptInput::Single { completion: completion(&gen_a) },
                &all_rubrics,
            )?,
            template_id(Paradigm::Ar, TemplateFlavor::IfEval),
        ),
        (
            Paradigm::Da,
            render_prompt(
                Paradigm::Da,
                TemplateFlavor::IfEval,
                instance,
                PromptInput::Single { completion: completion(&gen_a) },
                &all_rubrics,
            )?,
            template_id(Paradigm::Da, TemplateFlavor::IfEval),
        ),
        (
            Paradigm::Pwc,
            render_prompt(
                Paradigm::Pwc,
                TemplateFlavor::IfEval,
                instance,
                PromptInput::Pair {
                    first: completion(&gen_a),
                    second: completion(&gen_b),
                },
                &all_rubrics,
            )?,
            template_id(Paradigm::Pwc, TemplateFlavor::IfEval),
        ),
    ];
    for (paradigm, prompt, template) in &renders {
        println!("================ {paradigm} ({template}) ================");
        println!("sha256: {}\n", prompt_hash(prompt));
        println!("{prompt}");
    }
    Ok(())
}
