//! Zero-shot annotation through an HTTP chat-completion endpoint.

use std::thread;
use std::time::{Duration, Instant};

use crisis_ssl_core::corpus::LabelSchema;
use crisis_ssl_core::oracle::{LabelSource, PromptTemplate, PseudoClass, PseudoLabel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cache::{AnnotationCache, CacheKey};
use crate::error::{Error, Result};

/// Endpoint, retry and pacing settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSettings {
    /// Base URL, e.g. `https://api.example.com`.
    pub endpoint: String,
    pub path: String,
    pub model: String,
    pub max_retries: u32,
    /// Requests per second; 0 disables pacing.
    pub rate_limit: f64,
    /// First retry delay; doubles on every further attempt.
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
    /// Environment variable holding the bearer token. Unset means no auth header.
    pub token_env: String,
}

pub const DEFAULT_TOKEN_ENV: &str = "CRISIS_SSL_API_TOKEN";

impl Default for RemoteSettings {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000".into(),
            path: "/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            max_retries: 3,
            rate_limit: 5.0,
            backoff_base_ms: 500,
            timeout_secs: 60,
            token_env: DEFAULT_TOKEN_ENV.into(),
        }
    }
}

impl RemoteSettings {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint.is_empty() || self.model.is_empty() {
            return Err(Error::Config("remote endpoint and model must be set".into()));
        }
        if !(self.rate_limit.is_finite() && self.rate_limit >= 0.0) {
            return Err(Error::Config(format!("rate limit must be >= 0, got {}", self.rate_limit)));
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        format!("{}/{}", self.endpoint.trim_end_matches('/'), self.path.trim_start_matches('/'))
    }
}

#[derive(Debug, Clone)]
pub struct AnnotationRequest {
    pub settings: RemoteSettings,
    pub template: PromptTemplate,
    pub schema: LabelSchema,
    /// `(id, text)` pairs.
    pub batch: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteOutcome {
    /// One label per batch item, in order. Failed items are OOS without a raw response.
    pub labels: Vec<PseudoLabel>,
    /// `(id, reason)` for items that never got an answer.
    pub failures: Vec<(String, String)>,
    pub network_requests: usize,
    pub cache_hits: usize,
}

enum Attempt {
    Answer(String),
    Retry(String),
    Fail(String),
}

/// Label every batch item, answering from `cache` where possible and caching
/// each fresh answer before moving on. Transport errors, 429 and 5xx are
/// retried with exponential backoff; an auth rejection aborts the batch.
pub fn annotate_remote(request: &AnnotationRequest, cache: &mut AnnotationCache) -> Result<RemoteOutcome> {
    let settings = &request.settings;
    settings.validate()?;
    if request.batch.is_empty() {
        return Err(Error::Config("annotation batch is empty".into()));
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(settings.timeout_secs.max(1))))
        .build()
        .into();
    let token = std::env::var(&settings.token_env).ok().filter(|t| !t.is_empty());
    let url = settings.url();
    let skeleton = request.template.skeleton(&request.schema);
    let min_gap = (settings.rate_limit > 0.0).then(|| Duration::from_secs_f64(1.0 / settings.rate_limit));
    let mut last_sent: Option<Instant> = None;
    let mut outcome = RemoteOutcome { labels: Vec::new(), failures: Vec::new(), network_requests: 0, cache_hits: 0 };

    for (id, text) in &request.batch {
        let key = CacheKey::new(&settings.model, &skeleton, text);
        if let Some(response) = cache.get(&key) {
            outcome.cache_hits += 1;
            outcome.labels.push(PseudoLabel::from_response(id.as_str(), response, &request.schema, LabelSource::Remote));
            continue;
        }
        let body = json!({
            "model": settings.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": request.template.render(&request.schema, text) }],
        })
        .to_string();
        let mut answer = None;
        let mut last_error = String::new();
        for attempt in 0..=settings.max_retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(settings.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(20))));
            }
            if let (Some(gap), Some(prev)) = (min_gap, last_sent) {
                let elapsed = prev.elapsed();
                if elapsed < gap {
                    thread::sleep(gap - elapsed);
                }
            }
            last_sent = Some(Instant::now());
            outcome.network_requests += 1;
            match send(&agent, &url, token.as_deref(), &body)? {
                Attempt::Answer(content) => {
                    answer = Some(content);
                    break;
                }
                Attempt::Retry(reason) => {
                    log::debug!("{id}: attempt {} failed: {reason}", attempt + 1);
                    last_error = reason;
                }
                Attempt::Fail(reason) => {
                    last_error = reason;
                    break;
                }
            }
        }
        match answer {
            Some(content) => {
                cache.put(key, &content)?;
                outcome.labels.push(PseudoLabel::from_response(id.as_str(), &content, &request.schema, LabelSource::Remote));
            }
            None => {
                log::warn!("{id}: no annotation: {last_error}");
                outcome.failures.push((id.clone(), last_error));
                outcome.labels.push(PseudoLabel {
                    example_id: id.clone(),
                    label: PseudoClass::OutOfSchema,
                    confidence: 1.0,
                    source: LabelSource::Remote,
                    raw_response: None,
                });
            }
        }
    }
    Ok(outcome)
}

fn send(agent: &ureq::Agent, url: &str, token: Option<&str>, body: &str) -> Result<Attempt> {
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if let Some(token) = token {
        req = req.header("Authorization", format!("Bearer {token}"));
    }
    let mut resp = match req.send(body) {
        Ok(resp) => resp,
        Err(e) => return Ok(Attempt::Retry(format!("transport: {e}"))),
    };
    let status = resp.status().as_u16();
    let text = match resp.body_mut().read_to_string() {
        Ok(text) => text,
        Err(e) => return Ok(Attempt::Retry(format!("reading body: {e}"))),
    };
    match status {
        200..=299 => Ok(match extract_content(&text) {
            Some(content) => Attempt::Answer(content),
            None => Attempt::Fail(format!("unexpected response body: {}", truncate(&text))),
        }),
        401 | 403 => Err(Error::Auth { status }),
        429 | 500..=599 => Ok(Attempt::Retry(format!("HTTP {status}"))),
        _ => Ok(Attempt::Fail(format!("HTTP {status}: {}", truncate(&text)))),
    }
}

/// `choices[0].message.content` of a chat-completion response.
pub fn extract_content(body: &str) -> Option<String> {
    let value: Value = serde_json::from_str(body).ok()?;
    value.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

fn truncate(text: &str) -> String {
    text.chars().take(200).collect()
}
