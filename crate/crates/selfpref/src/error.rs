//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The CLI maps these onto its exit-code contract: configuration and usage
/// problems exit 1, data/validation problems exit 2, transport problems
/// exit 3 (see `commands::exit_code`).
#[derive(Debug, Error)]
pub enum Error {
    /// A persisted record could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A domain invariant was violated by otherwise well-formed data.
    #[error("validation error: {0}")]
    Validation(String),

    /// A model is missing from the family registry, or the registry is
    /// inconsistent.
    #[error("registry error: {0}")]
    Registry(String),

    /// A persisted file declares a schema this build does not understand.
    #[error("schema version mismatch: {0}")]
    Version(String),

    /// A record references an instance, rubric, or model that does not exist.
    #[error("cross-reference error: {0}")]
    CrossRef(String),

    /// Rubrics lack the verifier specs (or judge verdicts) an operation needs.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// Wrong number of rubrics or outputs for the selected prompt template.
    #[error("arity error: {0}")]
    Arity(String),

    /// A judge response contained no JSON object at all.
    #[error("response parse error: {0}")]
    ResponseParse(String),

    /// A judge response contained JSON that does not match the expected shape.
    #[error("response schema error: {0}")]
    ResponseSchema(String),

    /// Numeric input outside the function's domain (NaN, infinity).
    #[error("domain error: {0}")]
    Domain(String),

    /// An instance cannot be scored under the configured score function.
    #[error("scoring error: {0}")]
    Scoring(String),

    /// Bad run configuration: missing paths, invalid scenario, malformed plan.
    #[error("configuration error: {0}")]
    Config(String),

    /// HTTP-level failure talking to a judge endpoint.
    #[error("transport error: {0}")]
    Transport(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
