//! OpenAI-compatible chat-completions client.
//!
//! One blocking request per judging unit; concurrency and retries live in
//! the runner. Auth is a bearer token read from a named environment
//! variable, never from the config file itself.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelId;

/// Where and how to reach the judge endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL, e.g. `https://api.example.com` (the `/v1/chat/completions`
    /// path is appended).
    pub base_url: String,
    /// Endpoint model name per roster judge.
    pub models: BTreeMap<ModelId, String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

impl EndpointConfig {
    /// Every roster judge must map to an endpoint model name.
    pub fn validate_judges(&self, judges: &[ModelId]) -> Result<()> {
        let missing: Vec<&str> = judges
            .iter()
            .filter(|j| !self.models.contains_key(*j))
            .map(|j| j.as_str())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "endpoint config lacks model names for judges: {}",
                missing.join(", ")
            )))
        }
    }

    pub fn model_name(&self, judge: &ModelId) -> Result<&str> {
        self.models
            .get(judge)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("no endpoint model for judge '{judge}'")))
    }
}

/// Decoding settings for judge calls. Temperature 0 by default: the run
/// should be replayable, and the setting is configurable when it should not
/// be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

/// A blocking chat-completions client bound to one endpoint.
pub struct ChatClient {
    agent: ureq::Agent,
    url: String,
    token: Option<String>,
    models: BTreeMap<ModelId, String>,
}

impl ChatClient {
    pub fn new(config: &EndpointConfig) -> Result<Self> {
        let token = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!("auth environment variable '{var}' is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(ChatClient {
            agent,
            url: format!("{}/v1/chat/completions", config.base_url.trim_end_matches('/')),
            token,
            models: config.models.clone(),
        })
    }

    pub fn model_name(&self, judge: &ModelId) -> Result<&str> {
        self.models
            .get(judge)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("no endpoint model for judge '{judge}'")))
    }

    /// Sends one prompt as a single user message and returns the assistant
    /// text.
    pub fn complete(&self, model: &str, prompt: &str, sampling: Sampling) -> Result<String> {
        let body = ChatRequest {
            model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: sampling.temperature,
            max_tokens: sampling.max_tokens,
        };
        let mut request = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            request = request.header("authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| Error::Transport(format!("POST {}: {e}", self.url)))?;
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(format!("malformed chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Transport("chat response has no choices".into()))
    }
}
