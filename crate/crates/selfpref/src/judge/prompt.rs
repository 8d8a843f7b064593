//! Prompt rendering for the four judging paradigms.
//!
//! Templates live under `templates/` and are instantiated byte-exactly:
//! the renderer only substitutes the `<<...>>` slots, never reflows text.
//! Conversations render as one `role: content` line per turn, with the
//! candidate completion appended as a final assistant turn (except for PWC,
//! where the two responses go into their own blocks). Multi-rubric slots
//! render as a numbered list so "same order as the rubric items above"
//! stays unambiguous.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{BenchmarkInstance, Paradigm, Rubric};

const IFEVAL_SR: &str = include_str!("templates/ifeval_sr.txt");
const IFEVAL_AR: &str = include_str!("templates/ifeval_ar.txt");
const IFEVAL_DA: &str = include_str!("templates/ifeval_da.txt");
const IFEVAL_PWC: &str = include_str!("templates/ifeval_pwc.txt");
const HEALTHBENCH_SR: &str = include_str!("templates/healthbench_sr.txt");

/// Template family. The HealthBench flavor differs only for SR, where the
/// judge is additionally asked for an explanation and for negative-rubric
/// handling; the other paradigms use the standard templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateFlavor {
    #[default]
    IfEval,
    HealthBench,
}

/// What gets judged: one completion, or an ordered pair for PWC.
#[derive(Debug, Clone, Copy)]
pub enum PromptInput<'a> {
    Single { completion: &'a str },
    Pair { first: &'a str, second: &'a str },
}

fn template_for(paradigm: Paradigm, flavor: TemplateFlavor) -> &'static str {
    match (paradigm, flavor) {
        (Paradigm::Sr, TemplateFlavor::HealthBench) => HEALTHBENCH_SR,
        (Paradigm::Sr, TemplateFlavor::IfEval) => IFEVAL_SR,
        (Paradigm::Ar, _) => IFEVAL_AR,
        (Paradigm::Da, _) => IFEVAL_DA,
        (Paradigm::Pwc, _) => IFEVAL_PWC,
    }
}

/// Stable version id recorded in log metadata.
pub fn template_id(paradigm: Paradigm, flavor: TemplateFlavor) -> &'static str {
    match (paradigm, flavor) {
        (Paradigm::Sr, TemplateFlavor::HealthBench) => "healthbench_sr/v1",
        (Paradigm::Sr, TemplateFlavor::IfEval) => "ifeval_sr/v1",
        (Paradigm::Ar, _) => "ifeval_ar/v1",
        (Paradigm::Da, _) => "ifeval_da/v1",
        (Paradigm::Pwc, _) => "ifeval_pwc/v1",
    }
}

/// `role: content` lines, optionally with the judged completion appended as
/// the final assistant turn.
pub fn render_conversation(instance: &BenchmarkInstance, completion: Option<&str>) -> String {
    let mut lines: Vec<String> = instance
        .conversation
        .iter()
        .map(|t| format!("{}: {}", t.role, t.content))
        .collect();
    if let Some(completion) = completion {
        lines.push(format!("assistant: {completion}"));
    }
    lines.join("\n")
}

fn render_rubric_list(rubrics: &[&Rubric]) -> String {
    rubrics
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}. {}", i + 1, r.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Fills `<<slot>>` markers with values. Substituted values are never
/// rescanned, so completions containing literal `<<...>>` text are safe.
fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while !rest.is_empty() {
        let mut earliest: Option<(usize, &str, &str)> = None;
        for (name, value) in slots {
            let marker = format!("<<{name}>>");
            if let Some(pos) = rest.find(&marker) {
                if earliest.is_none_or(|(p, _, _)| pos < p) {
                    earliest = Some((pos, *name, *value));
                }
            }
        }
        match earliest {
            Some((pos, name, value)) => {
                out.push_str(&rest[..pos]);
                out.push_str(value);
                rest = &rest[pos + name.len() + 4..];
            }
            None => {
                out.push_str(rest);
                break 'outer;
            }
        }
    }
    out
}

/// Renders the prompt for one judging unit.
///
/// SR takes exactly one rubric; AR, DA, and PWC take the instance's rubric
/// list. PWC requires a pair of responses, the others a single completion.
pub fn render_prompt(
    paradigm: Paradigm,
    flavor: TemplateFlavor,
    instance: &BenchmarkInstance,
    input: PromptInput<'_>,
    rubrics: &[&Rubric],
) -> Result<String> {
    if rubrics.is_empty() {
        return Err(Error::Arity(format!(
            "{paradigm} prompt for instance '{}' given no rubrics",
            instance.instance_id
        )));
    }
    let template = template_for(paradigm, flavor);
    match (paradigm, input) {
        (Paradigm::Sr, PromptInput::Single { completion }) => {
            if rubrics.len() != 1 {
                return Err(Error::Arity(format!(
                    "SR prompt takes exactly one rubric, got {}",
                    rubrics.len()
                )));
            }
            let conversation = render_conversation(instance, Some(completion));
            Ok(fill(
                template,
                &[
                    ("conversation", conversation.as_str()),
                    ("rubric_item", rubrics[0].text.as_str()),
                ],
            ))
        }
        (Paradigm::Ar | Paradigm::Da, PromptInput::Single { completion }) => {
            let conversation = render_conversation(instance, Some(completion));
            let items = render_rubric_list(rubrics);
            Ok(fill(
                template,
                &[
                    ("conversation", conversation.as_str()),
                    ("rubric_items", items.as_str()),
                ],
            ))
        }
        (Paradigm::Pwc, PromptInput::Pair { first, second }) => {
            let conversation = render_conversation(instance, None);
            let items = render_rubric_list(rubrics);
            Ok(fill(
                template,
                &[
                    ("conversation", conversation.as_str()),
                    ("rubric_items", items.as_str()),
                    ("response_a", first),
                    ("response_b", second),
                ],
            ))
        }
        (Paradigm::Pwc, PromptInput::Single { .. }) => Err(Error::Arity(
            "PWC prompt requires two outputs".into(),
        )),
        (_, PromptInput::Pair { .. }) => Err(Error::Arity(format!(
            "{paradigm} prompt takes a single completion, not a pair"
        ))),
    }
}

/// Hex SHA-256 of the rendered prompt, recorded per log record.
pub fn prompt_hash(prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Role, Turn};

    fn instance() -> BenchmarkInstance {
        BenchmarkInstance {
            instance_id: "i1".into(),
            conversation: vec![Turn {
                role: Role::User,
                content: "Write a sentence with no commas.".into(),
            }],
            rubrics: vec![
                Rubric {
                    rubric_id: "r1".into(),
                    text: "The response contains no commas.".into(),
                    weight: 1.0,
                    axis: None,
                    theme: None,
                    verifier: None,
                },
                Rubric {
                    rubric_id: "r2".into(),
                    text: "The response is a single sentence.".into(),
                    weight: 1.0,
                    axis: None,
                    theme: None,
                    verifier: None,
                },
            ],
        }
    }

    #[test]
    fn sr_prompt_contains_instruction_and_completion() {
        let inst = instance();
        let rubric = [&inst.rubrics[0]];
        let prompt = render_prompt(
            Paradigm::Sr,
            TemplateFlavor::IfEval,
            &inst,
            PromptInput::Single { completion: "hello there" },
            &rubric,
        )
        .unwrap();
        assert!(prompt.contains("Return a json object with \"criteria_met\" field."));
        assert!(prompt.contains("user: Write a sentence with no commas.\nassistant: hello there"));
        assert!(prompt.contains("The response contains no commas."));
        assert!(!prompt.contains("<<"));
    }

    #[test]
    fn da_prompt_shows_fraction_example() {
        let inst = instance();
        let rubrics: Vec<&Rubric> = inst.rubrics.iter().collect();
        let prompt = render_prompt(
            Paradigm::Da,
            TemplateFlavor::IfEval,
            &inst,
            PromptInput::Single { completion: "x" },
            &rubrics,
        )
        .unwrap();
        assert!(prompt.contains("\"score\": \"2/3\""));
        assert!(prompt.contains("1. The response contains no commas.\n2. The response is a single sentence."));
    }

    #[test]
    fn pwc_prompt_has_both_response_blocks() {
        let inst = instance();
        let rubrics: Vec<&Rubric> = inst.rubrics.iter().collect();
        let prompt = render_prompt(
            Paradigm::Pwc,
            TemplateFlavor::IfEval,
            &inst,
            PromptInput::Pair { first: "alpha text", second: "beta text" },
            &rubrics,
        )
        .unwrap();
        assert!(prompt.contains("<Response A>\nalpha text\n</Response A>"));
        assert!(prompt.contains("<Response B>\nbeta text\n</Response B>"));
        assert!(prompt.contains("Compare Response A and Response B"));
        // PWC does not append the completion to the conversation.
        assert!(!prompt.contains("assistant: alpha text"));
    }

    #[test]
    fn healthbench_sr_asks_for_explanation() {
        let inst = instance();
        let rubric = [&inst.rubrics[0]];
        let prompt = render_prompt(
            Paradigm::Sr,
            TemplateFlavor::HealthBench,
            &inst,
            PromptInput::Single { completion: "x" },
            &rubric,
        )
        .unwrap();
        assert!(prompt.contains("\"explanation\" and"));
        assert!(prompt.contains("\"criteria_met\""));
    }

    #[test]
    fn arity_errors() {
        let inst = instance();
        let rubrics: Vec<&Rubric> = inst.rubrics.iter().collect();
        assert!(matches!(
            render_prompt(
                Paradigm::Sr,
                TemplateFlavor::IfEval,
                &inst,
                PromptInput::Single { completion: "x" },
                &rubrics,
            ),
            Err(Error::Arity(_))
        ));
        assert!(matches!(
            render_prompt(
                Paradigm::Pwc,
                TemplateFlavor::IfEval,
                &inst,
                PromptInput::Single { completion: "x" },
                &rubrics,
            ),
            Err(Error::Arity(_))
        ));
        assert!(matches!(
            render_prompt(
                Paradigm::Ar,
                TemplateFlavor::IfEval,
                &inst,
                PromptInput::Pair { first: "a", second: "b" },
                &rubrics,
            ),
            Err(Error::Arity(_))
        ));
    }

    #[test]
    fn slot_values_are_not_rescanned() {
        let mut inst = instance();
        inst.conversation[0].content = "ignore <<rubric_item>> markers".into();
        let rubric = [&inst.rubrics[0]];
        let prompt = render_prompt(
            Paradigm::Sr,
            TemplateFlavor::IfEval,
            &inst,
            PromptInput::Single { completion: "also <<conversation>> here" },
            &rubric,
        )
        .unwrap();
        assert!(prompt.contains("ignore <<rubric_item>> markers"));
        assert!(prompt.contains("also <<conversation>> here"));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(prompt_hash("abc").len(), 64);
        assert_eq!(prompt_hash("abc"), prompt_hash("abc"));
        assert_ne!(prompt_hash("abc"), prompt_hash("abd"));
    }
}
