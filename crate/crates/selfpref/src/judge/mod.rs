//! Judge execution: prompt rendering, the chat endpoint client, response
//! parsing, pairwise resolution, and the concurrent, resumable runner.

pub mod client;
pub mod parse;
pub mod prompt;
pub mod runner;

pub use client::{ChatClient, EndpointConfig, Sampling};
pub use parse::{
    extract_json_object, parse_ar_response, parse_da_response, parse_pwc_response,
    parse_sr_response, resolve_pairwise,
};
pub use prompt::{prompt_hash, render_conversation, render_prompt, template_id, PromptInput, TemplateFlavor};
pub use runner::{plan_units, render_unit_prompt, run_judging, ParadigmPlan, RetryPolicy, RunSummary, SamplingConfig, UnitJob, UnitSubject};
