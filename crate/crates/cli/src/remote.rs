//! Decision agents with IO: the chat-completion HTTP adapter and the
//! offline fixture agent that replays reply texts from a directory.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use chrono::NaiveDate;
use serde_json::json;

use lookahead_core::agent::{
    build_prompt, parse_weights, AgentDecisionRequest, AgentDecisionResponse, DecisionAgent,
};
use lookahead_core::error::{Error as CoreError, Result as CoreResult};
use lookahead_core::marketdata::PitSlice;
use lookahead_core::portfolio::{normalize_weights, PortfolioSummary, TargetWeights};
use lookahead_core::types::Ticker;

/// Endpoint settings for a remote chat-completion agent. The credential
/// is read from the named environment variable at construction and never
/// serialized or logged.
#[derive(Debug, Clone)]
pub struct AgentEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub temperature: f64,
    pub history_window_days: usize,
}

/// A decision agent backed by `POST {base_url}/chat/completions`. The
/// prompt is built from the point-in-time slice; the reply is parsed and
/// normalized through the shared protocol. Failures retry up to
/// `max_retries`; exhaustion reports the decision as unavailable, which
/// the engine turns into a hold.
pub struct RemoteChatAgent {
    config: AgentEndpointConfig,
    universe: Vec<Ticker>,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    /// Transcript of round-trips, for run logs.
    pub responses: Vec<AgentDecisionResponse>,
}

impl RemoteChatAgent {
    pub fn new(config: AgentEndpointConfig, universe: Vec<Ticker>) -> anyhow::Result<Self> {
        let api_key = std::env::var(&config.api_key_env).ok();
        if api_key.is_none() {
            log::warn!(
                "environment variable {} is not set; requests will be sent without credentials",
                config.api_key_env
            );
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()?;
        Ok(RemoteChatAgent {
            config,
            universe,
            client,
            api_key,
            responses: Vec::new(),
        })
    }

    fn call_endpoint(&self, prompt: &str) -> anyhow::Result<String> {
        let url = format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let body = json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        let mut request = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send()?.error_for_status()?;
        let value: serde_json::Value = response.json()?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| anyhow::anyhow!("response has no message content"))?;
        Ok(content.to_string())
    }

    fn decide_once(&self, prompt: &str) -> anyhow::Result<(String, TargetWeights)> {
        let raw_text = self.call_endpoint(prompt)?;
        let raw = parse_weights(&raw_text, &self.universe)
            .map_err(|e| anyhow::anyhow!("unparseable reply: {e}"))?;
        let weights = normalize_weights(raw).map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok((raw_text, weights))
    }
}

impl DecisionAgent for RemoteChatAgent {
    fn decide(
        &mut self,
        slice: &PitSlice<'_>,
        state: &PortfolioSummary,
        as_of: NaiveDate,
    ) -> CoreResult<TargetWeights> {
        let request = AgentDecisionRequest::from_slice(
            slice,
            &self.universe,
            self.config.history_window_days,
            state,
        )?;
        let prompt = build_prompt(&request);

        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.decide_once(&prompt) {
                Ok((raw_text, weights)) => {
                    self.responses.push(AgentDecisionResponse {
                        raw_text,
                        parsed_weights: weights.clone(),
                        retries_used: attempt,
                        fallback_applied: false,
                    });
                    return Ok(weights);
                }
                Err(e) => {
                    last_error = format!("{e:#}");
                    log::warn!(
                        "{} decision on {as_of}, attempt {}/{}: {last_error}",
                        self.config.model_name,
                        attempt + 1,
                        self.config.max_retries + 1
                    );
                }
            }
        }
        self.responses.push(AgentDecisionResponse {
            raw_text: String::new(),
            parsed_weights: TargetWeights::all_cash(),
            retries_used: self.config.max_retries,
            fallback_applied: true,
        });
        Err(CoreError::AgentUnavailable(format!(
            "{} failed after {} attempts: {last_error}",
            self.config.model_name,
            self.config.max_retries + 1
        )))
    }
}

/// An offline agent that reads `<date>.txt` reply files from a fixture
/// directory and runs them through the same parse-and-normalize path as
/// the remote adapter.
pub struct FixtureAgent {
    dir: PathBuf,
    universe: Vec<Ticker>,
}

impl FixtureAgent {
    pub fn new(dir: PathBuf, universe: Vec<Ticker>) -> Self {
        FixtureAgent { dir, universe }
    }

    /// Load every `<date>.txt` file in the directory.
    pub fn load_replies(&self) -> anyhow::Result<BTreeMap<NaiveDate, String>> {
        let mut replies = BTreeMap::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let Ok(date) = stem.parse::<NaiveDate>() else {
                continue;
            };
            replies.insert(date, std::fs::read_to_string(&path)?);
        }
        Ok(replies)
    }
}

impl DecisionAgent for FixtureAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        as_of: NaiveDate,
    ) -> CoreResult<TargetWeights> {
        let path = self.dir.join(format!("{}.txt", as_of.format("%Y-%m-%d")));
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CoreError::AgentUnavailable(format!("no fixture reply {}: {e}", path.display()))
        })?;
        let raw = parse_weights(&text, &self.universe)
            .map_err(|e| CoreError::AgentUnavailable(format!("unparseable fixture: {e}")))?;
        normalize_weights(raw)
    }
}
