use std::time::Duration;

use chrono::Utc;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{ProviderStatus, TestCase, UsageLogEntry};

/// Chat-completions provider settings (OpenRouter-compatible wire format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key_env_var: String,
    pub temperature: f64,
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub concurrency_limit: usize,
    pub backoff_base_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://openrouter.ai/api/v1".into(),
            api_key_env_var: "OPENROUTER_API_KEY".into(),
            temperature: 0.0,
            max_retries: 4,
            timeout_secs: 300,
            concurrency_limit: 4,
            backoff_base_ms: 1000,
        }
    }
}

/// Delay before retry number `retry` (0-based): `base * 2^retry` plus up to
/// a quarter of that again as jitter.
pub fn backoff_delay(base_ms: u64, retry: u32, rng: &mut impl Rng) -> Duration {
    let step = base_ms.saturating_mul(1u64 << retry.min(20));
    let jitter = if step >= 4 { rng.gen_range(0..=step / 4) } else { 0 };
    Duration::from_millis(step + jitter)
}

struct Reply {
    content: String,
    prompt_tokens: u64,
    completion_tokens: u64,
    cost_usd: f64,
}

fn parse_reply(body: &Value) -> Result<Reply, String> {
    let content = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| "response has no choices[0].message.content".to_string())?;
    let usage = body.get("usage");
    let num = |k: &str| usage.and_then(|u| u.get(k)).and_then(Value::as_u64).unwrap_or(0);
    Ok(Reply {
        content: content.to_string(),
        prompt_tokens: num("prompt_tokens"),
        completion_tokens: num("completion_tokens"),
        cost_usd: usage.and_then(|u| u.get("cost")).and_then(Value::as_f64).unwrap_or(0.0),
    })
}

fn is_timeout(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::Timeout(_) => true,
        ureq::Error::Io(e) => matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock),
        _ => false,
    }
}

fn attempt_once(agent: &ureq::Agent, cfg: &ProviderConfig, key: &str, tc: &TestCase, prompt: &str) -> Result<Reply, (ProviderStatus, String)> {
    let url = format!("{}/chat/completions", cfg.base_url.trim_end_matches('/'));
    let body = json!({
        "model": tc.llm_id,
        "messages": [{ "role": "user", "content": prompt }],
        "temperature": cfg.temperature,
        "usage": { "include": true },
    });
    let mut resp = agent
        .post(&url)
        .header("Authorization", format!("Bearer {key}"))
        .send_json(&body)
        .map_err(|e| {
            if is_timeout(&e) {
                (ProviderStatus::Timeout, String::new())
            } else {
                (ProviderStatus::Error(e.to_string()), String::new())
            }
        })?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(|e| {
        if is_timeout(&e) {
            (ProviderStatus::Timeout, String::new())
        } else {
            (ProviderStatus::Error(e.to_string()), String::new())
        }
    })?;
    if !(200..300).contains(&status) {
        return Err((ProviderStatus::Error(format!("HTTP {status}")), text));
    }
    let value: Value = serde_json::from_str(&text).map_err(|e| (ProviderStatus::Error(format!("bad JSON: {e}")), text.clone()))?;
    parse_reply(&value).map_err(|m| (ProviderStatus::Error(m), text))
}

/// Sends one prompt, retrying failures with exponential backoff, and
/// returns a single usage entry describing the outcome. `attempt` on the
/// entry counts every try, so two timeouts followed by a success give 3.
pub fn request_generation(prompt: &str, test_case: &TestCase, cfg: &ProviderConfig) -> UsageLogEntry {
    request_generation_from(prompt, test_case, cfg, 1)
}

/// Like [`request_generation`] but numbers the first try `first_attempt`,
/// so that re-requests of an earlier failure keep counting upwards.
pub fn request_generation_from(prompt: &str, test_case: &TestCase, cfg: &ProviderConfig, first_attempt: u32) -> UsageLogEntry {
    let entry = |status, output: String, attempt, reply: Option<&Reply>| UsageLogEntry {
        timestamp: Utc::now(),
        test_case: test_case.clone(),
        full_input: prompt.to_string(),
        full_output: reply.map(|r| r.content.clone()).unwrap_or(output),
        prompt_tokens: reply.map_or(0, |r| r.prompt_tokens),
        completion_tokens: reply.map_or(0, |r| r.completion_tokens),
        cost_usd: reply.map_or(0.0, |r| r.cost_usd),
        provider_status: status,
        attempt,
    };
    let key = match std::env::var(&cfg.api_key_env_var) {
        Ok(k) if !k.is_empty() => k,
        _ => {
            let msg = format!("API key variable {} is not set", cfg.api_key_env_var);
            return entry(ProviderStatus::Error(msg), String::new(), first_attempt, None);
        }
    };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(cfg.timeout_secs.max(1))))
        .http_status_as_error(false)
        .build()
        .into();
    let mut rng = rand::thread_rng();
    let mut attempt = first_attempt;
    let mut retry = 0;
    loop {
        debug!(case = ?test_case, attempt, "provider request");
        match attempt_once(&agent, cfg, &key, test_case, prompt) {
            Ok(reply) => return entry(ProviderStatus::Success, String::new(), attempt, Some(&reply)),
            Err((status, body)) => {
                warn!(model = %test_case.model_id, llm = %test_case.llm_id, attempt, ?status, "provider attempt failed");
                if retry >= cfg.max_retries {
                    return entry(status, body, attempt, None);
                }
            }
        }
        std::thread::sleep(backoff_delay(cfg.backoff_base_ms, retry, &mut rng));
        retry += 1;
        attempt += 1;
    }
}
