//! Chat-completions transports and the bounded, retrying sampler.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::prompt::PromptSpec;
use crate::error::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    /// Sent as the `seed` parameter; base seed plus the sample's index.
    pub seed: u64,
}

impl ChatRequest {
    pub fn from_prompt(model: &str, prompt: &PromptSpec, temperature: f64, seed: u64) -> ChatRequest {
        ChatRequest {
            model: model.to_string(),
            messages: vec![
                ChatMessage { role: "system".into(), content: prompt.system.clone() },
                ChatMessage { role: "user".into(), content: prompt.user.clone() },
            ],
            temperature,
            seed,
        }
    }

    /// Text of the first message with this role, or "".
    pub fn content(&self, role: &str) -> &str {
        self.messages.iter().find(|m| m.role == role).map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: connection failures, timeouts, 429 and 5xx.
    Transient(String),
    Auth(String),
    Rejected(String),
    Malformed(String),
}

pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;

    /// Upper bound on concurrent requests this transport tolerates.
    fn max_in_flight(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    pub max_retries: usize,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
    pub seed: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: "http://localhost:8000/v1".into(),
            api_key: None,
            model: "gpt-4o".into(),
            max_retries: 3,
            concurrency: 4,
            timeout_secs: 120,
            backoff_ms: 500,
            seed: 0,
        }
    }
}

/// OpenAI-compatible `POST {url}/chat/completions` with bearer auth.
pub struct HttpTransport {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: &EndpointConfig) -> Result<HttpTransport, LlmError> {
        let base = config.url.trim_end_matches('/');
        let url =
            if base.ends_with("/chat/completions") { base.to_string() } else { format!("{base}/chat/completions") };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::InvalidRequest(e.to_string()))?;
        Ok(HttpTransport { url, api_key: config.api_key.clone(), client })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "seed": request.seed,
            "n": 1,
        });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TransportError::Transient(e.to_string()))?;
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(TransportError::Auth(format!("{status}: {text}")));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("{status}: {text}")));
        }
        if !status.is_success() {
            return Err(TransportError::Rejected(format!("{status}: {text}")));
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| TransportError::Malformed(format!("{e}: {text}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Malformed(format!("no choices[0].message.content in {text}")))
    }
}

/// Replays a fixed list of replies in call order. Requests are served one
/// at a time so the order is deterministic.
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<String>>,
}

impl ScriptedTransport {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> ScriptedTransport {
        ScriptedTransport { replies: Mutex::new(replies.into_iter().map(Into::into).collect()) }
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }
}

impl Transport for ScriptedTransport {
    fn complete(&self, _request: &ChatRequest) -> Result<String, TransportError> {
        self.replies.lock().unwrap().pop_front().ok_or_else(|| TransportError::Rejected("script exhausted".into()))
    }

    fn max_in_flight(&self) -> Option<usize> {
        Some(1)
    }
}

/// One canned-response rule: every `contains` string must occur in the
/// system or user message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default)]
    pub contains: Vec<String>,
    pub replies: Vec<String>,
}

/// Rule-driven mock: the first matching rule answers with
/// `replies[seed % replies.len()]`, so output depends only on the request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleTransport {
    pub rules: Vec<MockRule>,
    #[serde(default)]
    pub default: Option<String>,
}

impl RuleTransport {
    pub fn from_json(text: &str) -> Result<RuleTransport, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl Transport for RuleTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let (system, user) = (request.content("system"), request.content("user"));
        for rule in &self.rules {
            if rule.replies.is_empty() {
                continue;
            }
            if rule.contains.iter().all(|c| system.contains(c.as_str()) || user.contains(c.as_str())) {
                return Ok(rule.replies[(request.seed % rule.replies.len() as u64) as usize].clone());
            }
        }
        self.default.clone().ok_or_else(|| TransportError::Rejected("no mock rule matches the request".into()))
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut n = self.permits.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

/// Issues sampling requests with retries and a shared in-flight limit.
pub struct Sampler {
    transport: Arc<dyn Transport>,
    config: EndpointConfig,
    limit: Semaphore,
}

impl Sampler {
    pub fn new(transport: Arc<dyn Transport>, config: EndpointConfig) -> Sampler {
        let permits = config.concurrency.max(1).min(transport.max_in_flight().unwrap_or(usize::MAX));
        Sampler { transport, config, limit: Semaphore { permits: Mutex::new(permits), freed: Condvar::new() } }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn sequential(&self) -> bool {
        self.transport.max_in_flight() == Some(1) || self.config.concurrency <= 1
    }

    /// `n` responses for one prompt; sample `i` is sent with seed
    /// `config.seed + first_index + i`.
    pub fn sample(
        &self,
        prompt: &PromptSpec,
        n: usize,
        temperature: f64,
        first_index: u64,
    ) -> Result<Vec<String>, LlmError> {
        if n == 0 {
            return Err(LlmError::InvalidRequest("n must be at least 1".into()));
        }
        let requests: Vec<ChatRequest> = (0..n as u64)
            .map(|i| {
                let seed = self.config.seed.wrapping_add(first_index).wrapping_add(i);
                ChatRequest::from_prompt(&self.config.model, prompt, temperature, seed)
            })
            .collect();
        if self.sequential() {
            requests.iter().map(|r| self.request(r)).collect()
        } else {
            requests.par_iter().map(|r| self.request(r)).collect()
        }
    }

    fn request(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            let outcome = {
                let _permit = self.limit.acquire();
                self.transport.complete(request)
            };
            match outcome {
                Ok(text) => return Ok(text),
                Err(TransportError::Auth(m)) => return Err(LlmError::Auth(m)),
                Err(TransportError::Rejected(m)) => return Err(LlmError::InvalidRequest(m)),
                Err(TransportError::Malformed(m)) => return Err(LlmError::BadResponse(m)),
                Err(TransportError::Transient(m)) => {
                    last = m;
                    if attempt + 1 < attempts {
                        let backoff = self.config.backoff_ms.saturating_mul(1 << attempt.min(10));
                        std::thread::sleep(Duration::from_millis(backoff));
                    }
                }
            }
        }
        Err(LlmError::EndpointUnavailable { attempts, message: last })
    }
}
