//! Parsing judge responses into typed verdicts, and resolving double-run
//! pairwise comparisons.
//!
//! The prompts ask for "just the json object", but models routinely wrap it
//! in prose or a reasoning preamble, so extraction takes the last
//! well-formed JSON object in the response, preferring fenced blocks.
//! Every parser returns a typed value or a typed error; none panic on
//! arbitrary text.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Fraction, Outcome, RunOutcome};

/// Extracts the last well-formed JSON object from free-form text. Fenced
/// ```...``` blocks are tried first; bare objects second.
pub fn extract_json_object(text: &str) -> Option<Value> {
    if let Some(v) = last_fenced_object(text) {
        return Some(v);
    }
    last_bare_object(text)
}

fn last_fenced_object(text: &str) -> Option<Value> {
    let mut found = None;
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after_open = &rest[open + 3..];
        // Skip the info string ("json", "JSON", ...) up to the first newline.
        let body_start = after_open.find('\n').map(|i| i + 1).unwrap_or(after_open.len());
        let body = &after_open[body_start..];
        let Some(close) = body.find("```") else {
            break;
        };
        if let Some(v) = parse_leading_object(body[..close].trim()) {
            found = Some(v);
        }
        rest = &body[close + 3..];
    }
    found
}

fn last_bare_object(text: &str) -> Option<Value> {
    let bytes = text.as_bytes();
    let mut found = None;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            // Objects nested inside a parsed object are skipped: only
            // top-level objects compete for "last".
            if let Some((v, consumed)) = parse_leading_object_with_len(&text[i..]) {
                found = Some(v);
                i += consumed.max(1);
                continue;
            }
        }
        i += 1;
    }
    found
}

/// Parses one JSON value from the start of `text`, tolerating trailing
/// content, and keeps it only if it is an object.
fn parse_leading_object(text: &str) -> Option<Value> {
    parse_leading_object_with_len(text).map(|(v, _)| v)
}

fn parse_leading_object_with_len(text: &str) -> Option<(Value, usize)> {
    let mut stream = serde_json::Deserializer::from_str(text).into_iter::<Value>();
    match stream.next() {
        Some(Ok(v)) if v.is_object() => {
            let consumed = stream.byte_offset();
            Some((v, consumed))
        }
        _ => None,
    }
}

/// SR: reads the boolean `criteria_met`. An `explanation` field (HealthBench
/// SR) is tolerated and ignored for the verdict.
pub fn parse_sr_response(text: &str) -> Result<bool> {
    let obj = extract_json_object(text)
        .ok_or_else(|| Error::ResponseParse("no JSON object in response".into()))?;
    match obj.get("criteria_met") {
        Some(Value::Bool(met)) => Ok(*met),
        Some(other) => Err(Error::ResponseSchema(format!(
            "criteria_met must be a boolean, got {other}"
        ))),
        None => Err(Error::ResponseSchema("missing criteria_met field".into())),
    }
}

/// AR: reads `results`, a list of `{"criteria_met": bool}` objects whose
/// length must equal the number of rubrics, in rubric order.
pub fn parse_ar_response(text: &str, n_rubrics: usize) -> Result<Vec<bool>> {
    let obj = extract_json_object(text)
        .ok_or_else(|| Error::ResponseParse("no JSON object in response".into()))?;
    let results = match obj.get("results") {
        Some(Value::Array(items)) => items,
        Some(other) => {
            return Err(Error::ResponseSchema(format!(
                "results must be a list, got {other}"
            )))
        }
        None => return Err(Error::ResponseSchema("missing results field".into())),
    };
    if results.len() != n_rubrics {
        return Err(Error::ResponseSchema(format!(
            "expected {n_rubrics} results, got {}",
            results.len()
        )));
    }
    results
        .iter()
        .enumerate()
        .map(|(i, item)| match item.get("criteria_met") {
            Some(Value::Bool(met)) => Ok(*met),
            _ => Err(Error::ResponseSchema(format!(
                "results[{i}] is missing a boolean criteria_met"
            ))),
        })
        .collect()
}

/// DA: reads `score` as an `"X/Y"` string with `0 <= X <= Y` and
/// `Y == n_rubrics`, kept as an exact fraction.
pub fn parse_da_response(text: &str, n_rubrics: usize) -> Result<Fraction> {
    let obj = extract_json_object(text)
        .ok_or_else(|| Error::ResponseParse("no JSON object in response".into()))?;
    let score = match obj.get("score") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            return Err(Error::ResponseSchema(format!(
                "score must be an \"X/Y\" string, got {other}"
            )))
        }
        None => return Err(Error::ResponseSchema("missing score field".into())),
    };
    let Some((x, y)) = score.split_once('/') else {
        return Err(Error::ResponseSchema(format!(
            "score '{score}' is not in X/Y form"
        )));
    };
    let num: u32 = x
        .trim()
        .parse()
        .map_err(|_| Error::ResponseSchema(format!("score numerator '{x}' is not an integer")))?;
    let den: u32 = y
        .trim()
        .parse()
        .map_err(|_| Error::ResponseSchema(format!("score denominator '{y}' is not an integer")))?;
    if den as usize != n_rubrics {
        return Err(Error::ResponseSchema(format!(
            "score denominator {den} does not match {n_rubrics} rubric items"
        )));
    }
    if num > den {
        return Err(Error::ResponseSchema(format!(
            "score {num}/{den} exceeds 1"
        )));
    }
    Fraction::new(num, den).map_err(|e| Error::ResponseSchema(e.to_string()))
}

/// PWC: maps the exact outcome strings to a run outcome.
pub fn parse_pwc_response(text: &str) -> Result<RunOutcome> {
    let obj = extract_json_object(text)
        .ok_or_else(|| Error::ResponseParse("no JSON object in response".into()))?;
    match obj.get("outcome") {
        Some(Value::String(s)) => match s.as_str() {
            "A is better" => Ok(RunOutcome::First),
            "B is better" => Ok(RunOutcome::Second),
            "tie" => Ok(RunOutcome::Tie),
            other => Err(Error::ResponseSchema(format!(
                "unrecognized outcome '{other}'"
            ))),
        },
        Some(other) => Err(Error::ResponseSchema(format!(
            "outcome must be a string, got {other}"
        ))),
        None => Err(Error::ResponseSchema("missing outcome field".into())),
    }
}

/// Resolves the two presentation orders of one comparison into a single
/// outcome for the canonical first-named generator G.
///
/// `run_gg` presented (G, G'); `run_gg_swapped` presented (G', G). If exactly
/// one run is a tie, the non-tie result stands. If both are ties, or the two
/// runs disagree on the winner, the result is a tie. Total over all nine
/// input combinations.
pub fn resolve_pairwise(run_gg: RunOutcome, run_gg_swapped: RunOutcome) -> Outcome {
    let first = match run_gg {
        RunOutcome::First => Outcome::Win,
        RunOutcome::Second => Outcome::Loss,
        RunOutcome::Tie => Outcome::Tie,
    };
    // In the swapped run, G was presented as Response B.
    let second = match run_gg_swapped {
        RunOutcome::First => Outcome::Loss,
        RunOutcome::Second => Outcome::Win,
        RunOutcome::Tie => Outcome::Tie,
    };
    match (first, second) {
        (Outcome::Tie, other) => other,
        (other, Outcome::Tie) => other,
        (a, b) if a == b => a,
        _ => Outcome::Tie,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sr_fenced_and_bare() {
        assert!(!parse_sr_response("```json\n{\n  \"criteria_met\": false\n}\n```").unwrap());
        assert!(parse_sr_response("{\"explanation\":\"because\",\"criteria_met\":true}").unwrap());
        assert!(matches!(
            parse_sr_response("Sure! The answer is yes."),
            Err(Error::ResponseParse(_))
        ));
        assert!(matches!(
            parse_sr_response("{\"criteria_met\": \"yes\"}"),
            Err(Error::ResponseSchema(_))
        ));
    }

    #[test]
    fn extraction_prefers_last_object_and_fences() {
        // Reasoning preamble with an early object: the final fenced block wins.
        let text = "I think {\"criteria_met\": true} but actually:\n```json\n{\"criteria_met\": false}\n```";
        assert!(!parse_sr_response(text).unwrap());
        // Multiple bare objects: last one wins.
        let text = "{\"criteria_met\": true} ... {\"criteria_met\": false}";
        assert!(!parse_sr_response(text).unwrap());
        // Nested braces survive extraction.
        let text = "{\"criteria_met\": true, \"extra\": {\"depth\": 2}}";
        assert!(parse_sr_response(text).unwrap());
    }

    #[test]
    fn ar_lengths() {
        let three = "{\"results\":[{\"criteria_met\":true},{\"criteria_met\":false},{\"criteria_met\":true}]}";
        assert_eq!(parse_ar_response(three, 3).unwrap(), vec![true, false, true]);
        let one = "{\"results\":[{\"criteria_met\":true}]}";
        assert_eq!(parse_ar_response(one, 1).unwrap(), vec![true]);
        let two = "{\"results\":[{\"criteria_met\":true},{\"criteria_met\":false}]}";
        assert!(matches!(parse_ar_response(two, 3), Err(Error::ResponseSchema(_))));
        assert!(matches!(parse_ar_response("{}", 1), Err(Error::ResponseSchema(_))));
    }

    #[test]
    fn da_fraction_rules() {
        assert_eq!(
            parse_da_response("{\"score\": \"2/3\"}", 3).unwrap(),
            Fraction::new(2, 3).unwrap()
        );
        let zero = parse_da_response("{\"score\": \"0/3\"}", 3).unwrap();
        assert_eq!(zero.num(), 0);
        assert_eq!(zero.den(), 3);
        assert!(matches!(
            parse_da_response("{\"score\": \"4/3\"}", 3),
            Err(Error::ResponseSchema(_))
        ));
        assert!(matches!(
            parse_da_response("{\"score\": \"2/4\"}", 3),
            Err(Error::ResponseSchema(_))
        ));
        assert!(matches!(
            parse_da_response("{\"score\": \"two thirds\"}", 3),
            Err(Error::ResponseSchema(_))
        ));
        assert!(matches!(
            parse_da_response("{\"score\": 0.66}", 3),
            Err(Error::ResponseSchema(_))
        ));
    }

    #[test]
    fn pwc_exact_strings() {
        assert_eq!(
            parse_pwc_response("{\"outcome\": \"B is better\"}").unwrap(),
            RunOutcome::Second
        );
        assert_eq!(parse_pwc_response("{\"outcome\": \"tie\"}").unwrap(), RunOutcome::Tie);
        assert_eq!(
            parse_pwc_response("{\"outcome\": \"A is better\"}").unwrap(),
            RunOutcome::First
        );
        assert!(matches!(
            parse_pwc_response("{\"outcome\": \"both\"}"),
            Err(Error::ResponseSchema(_))
        ));
    }

    #[test]
    fn resolve_all_nine_combinations() {
        use RunOutcome::{First, Second, Tie};
        let cases = [
            ((First, First), Outcome::Tie),    // runs disagree on the winner
            ((First, Second), Outcome::Win),   // both runs favor G
            ((First, Tie), Outcome::Win),      // non-tie result stands
            ((Second, First), Outcome::Loss),  // both favor G'
            ((Second, Second), Outcome::Tie),  // disagree
            ((Second, Tie), Outcome::Loss),
            ((Tie, First), Outcome::Loss),
            ((Tie, Second), Outcome::Win),
            ((Tie, Tie), Outcome::Tie),        // both runs are ties
        ];
        for ((a, b), expected) in cases {
            assert_eq!(resolve_pairwise(a, b), expected, "({a:?}, {b:?})");
        }
    }

    #[test]
    fn resolve_is_antisymmetric_under_pair_swap() {
        use RunOutcome::*;
        // Swapping the canonical pair turns run (G,G') into the swapped run of
        // (G',G) and vice versa; the resolved outcome must flip.
        for a in [First, Second, Tie] {
            for b in [First, Second, Tie] {
                assert_eq!(resolve_pairwise(a, b), resolve_pairwise(b, a).flip());
            }
        }
    }

    proptest! {
        // Parsers are total: any text yields Ok or a typed error, no panics.
        #[test]
        fn parsers_never_panic(text in ".{0,400}", n in 1usize..5) {
            let _ = parse_sr_response(&text);
            let _ = parse_ar_response(&text, n);
            let _ = parse_da_response(&text, n);
            let _ = parse_pwc_response(&text);
        }

        #[test]
        fn extraction_finds_valid_objects(met in proptest::bool::ANY, prefix in "[a-z ]{0,40}", suffix in "[a-z ]{0,40}") {
            let text = format!("{prefix}{{\"criteria_met\": {met}}}{suffix}");
            prop_assert_eq!(parse_sr_response(&text).unwrap(), met);
        }
    }
}
