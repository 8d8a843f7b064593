//! Programmatic ground-truth checkers for verifiable rubrics.
//!
//! Every checker is a pure, total function of the completion text, so the
//! resulting reference verdicts are bit-stable across platforms. The text
//! conventions are fixed and documented here rather than locale-dependent:
//!
//! - words are maximal whitespace-delimited tokens;
//! - paragraphs are blocks of lines separated by blank (whitespace-only)
//!   lines;
//! - bullets are lines starting with `- ` or `* `;
//! - case checks are Unicode-aware: "all lowercase" means no uppercase
//!   character appears anywhere, and vice versa;
//! - keyword matching is case-insensitive on case-folded text with word
//!   boundaries, where a boundary is any non-alphanumeric character.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BenchmarkInstance, Fraction};

/// A checker attached to a rubric. A rubric is objectively checkable exactly
/// when it carries one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerifierSpec {
    /// The completion contains no `,` character.
    NoCommas,
    /// No uppercase character appears.
    AllLowercase,
    /// No lowercase character appears.
    AllUppercase,
    /// At least `n` words.
    MinWords { n: usize },
    /// At most `n` words.
    MaxWords { n: usize },
    /// `keyword` appears at least `n_min` times (default 1).
    MustIncludeKeyword {
        keyword: String,
        #[serde(default = "default_n_min")]
        n_min: usize,
    },
    /// `keyword` never appears.
    ForbiddenWord { keyword: String },
    /// Exactly `n` paragraphs.
    NumParagraphs { n: usize },
    /// Ends with `phrase` after stripping trailing whitespace.
    EndsWith { phrase: String },
    /// Starts with `phrase` after stripping leading whitespace.
    StartsWith { phrase: String },
    /// Exactly `n` bullet lines.
    NumBullets { n: usize },
}

fn default_n_min() -> usize {
    1
}

impl VerifierSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            VerifierSpec::MustIncludeKeyword { keyword, n_min } => {
                if keyword.is_empty() {
                    return Err(Error::Validation("must_include_keyword: empty keyword".into()));
                }
                if *n_min == 0 {
                    return Err(Error::Validation(
                        "must_include_keyword: n_min must be at least 1".into(),
                    ));
                }
            }
            VerifierSpec::ForbiddenWord { keyword } => {
                if keyword.is_empty() {
                    return Err(Error::Validation("forbidden_word: empty keyword".into()));
                }
            }
            VerifierSpec::EndsWith { phrase } if phrase.is_empty() => {
                return Err(Error::Validation("ends_with: empty phrase".into()));
            }
            VerifierSpec::StartsWith { phrase } if phrase.is_empty() => {
                return Err(Error::Validation("starts_with: empty phrase".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Stable tag, matching the serialized `kind` field.
    pub fn kind(&self) -> &'static str {
        match self {
            VerifierSpec::NoCommas => "no_commas",
            VerifierSpec::AllLowercase => "all_lowercase",
            VerifierSpec::AllUppercase => "all_uppercase",
            VerifierSpec::MinWords { .. } => "min_words",
            VerifierSpec::MaxWords { .. } => "max_words",
            VerifierSpec::MustIncludeKeyword { .. } => "must_include_keyword",
            VerifierSpec::ForbiddenWord { .. } => "forbidden_word",
            VerifierSpec::NumParagraphs { .. } => "num_paragraphs",
            VerifierSpec::EndsWith { .. } => "ends_with",
            VerifierSpec::StartsWith { .. } => "starts_with",
            VerifierSpec::NumBullets { .. } => "num_bullets",
        }
    }
}

/// Number of maximal whitespace-delimited tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Number of blocks of consecutive non-blank lines.
pub fn paragraph_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_block = false;
    for line in text.lines() {
        if line.trim().is_empty() {
            in_block = false;
        } else if !in_block {
            count += 1;
            in_block = true;
        }
    }
    count
}

/// Number of lines starting with `- ` or `* `.
pub fn bullet_count(text: &str) -> usize {
    text.lines()
        .filter(|l| l.starts_with("- ") || l.starts_with("* "))
        .count()
}

/// Occurrences of `keyword` in `text`, case-insensitively and bounded by
/// non-alphanumeric characters (or the ends of the text) on both sides.
pub fn keyword_count(text: &str, keyword: &str) -> usize {
    let text: Vec<char> = text.to_lowercase().chars().collect();
    let kw: Vec<char> = keyword.to_lowercase().chars().collect();
    if kw.is_empty() || kw.len() > text.len() {
        return 0;
    }
    let mut count = 0;
    for start in 0..=(text.len() - kw.len()) {
        if text[start..start + kw.len()] != kw[..] {
            continue;
        }
        let left_ok = start == 0 || !text[start - 1].is_alphanumeric();
        let end = start + kw.len();
        let right_ok = end == text.len() || !text[end].is_alphanumeric();
        if left_ok && right_ok {
            count += 1;
        }
    }
    count
}

/// Checks one completion against one spec. Deterministic and total: any text
/// yields a met/unmet verdict.
pub fn verify(spec: &VerifierSpec, completion: &str) -> bool {
    match spec {
        VerifierSpec::NoCommas => !completion.contains(','),
        VerifierSpec::AllLowercase => !completion.chars().any(char::is_uppercase),
        VerifierSpec::AllUppercase => !completion.chars().any(char::is_lowercase),
        VerifierSpec::MinWords { n } => word_count(completion) >= *n,
        VerifierSpec::MaxWords { n } => word_count(completion) <= *n,
        VerifierSpec::MustIncludeKeyword { keyword, n_min } => {
            keyword_count(completion, keyword) >= *n_min
        }
        VerifierSpec::ForbiddenWord { keyword } => keyword_count(completion, keyword) == 0,
        VerifierSpec::NumParagraphs { n } => paragraph_count(completion) == *n,
        VerifierSpec::EndsWith { phrase } => completion.trim_end().ends_with(phrase.as_str()),
        VerifierSpec::StartsWith { phrase } => completion.trim_start().starts_with(phrase.as_str()),
        VerifierSpec::NumBullets { n } => bullet_count(completion) == *n,
    }
}

/// Runs every rubric's verifier against one completion, yielding the
/// per-rubric verdicts and the exact satisfied fraction.
pub fn verify_instance(
    instance: &BenchmarkInstance,
    completion: &str,
) -> Result<(Vec<bool>, Fraction)> {
    let missing: Vec<&str> = instance
        .rubrics
        .iter()
        .filter(|r| r.verifier.is_none())
        .map(|r| r.rubric_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(format!(
            "instance '{}': rubrics without verifier specs: {}",
            instance.instance_id,
            missing.join(", ")
        )));
    }
    let verdicts: Vec<bool> = instance
        .rubrics
        .iter()
        .map(|r| verify(r.verifier.as_ref().expect("checked above"), completion))
        .collect();
    let met = verdicts.iter().filter(|v| **v).count() as u32;
    let total = verdicts.len() as u32;
    Ok((verdicts, Fraction::new(met, total)?))
}
