//! selfpref measures self-preference bias (SPB) of LLM judges: the tendency
//! to rule more favorably on their own outputs (or their model family's) than
//! the ground truth warrants.
//!
//! The toolkit covers four judging paradigms — single-rubric (SR),
//! all-rubrics (AR), direct assessment (DA), and pairwise comparison (PWC) —
//! and computes overestimation rates, HSPP ratios, rubric/instance accuracy,
//! committee aggregation, agreement filtering, centered score delta matrices,
//! and rubric-population slices. A seeded simulator with a closed-form bias
//! oracle calibrates the whole estimator stack offline.
//!
//! Start with the runnable examples (`cargo run -p selfpref --example ...`)
//! or the `selfpref` binary's `judge`, `verify`, `metrics`, `analyze`, and
//! `simulate` subcommands.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod judge;
pub mod metrics;
pub mod model;
pub mod report;
pub mod sim;
pub mod store;
pub mod verifier;

pub use error::{Error, Result};
