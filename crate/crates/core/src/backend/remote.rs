//! Chat-completions HTTP client.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::{GenerationParams, Prompt, TextBackend};
use crate::error::BackendError;

#[derive(Serialize)]
struct Message<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 2],
    temperature: f64,
    max_tokens: u32,
}

/// Counting gate bounding in-flight requests.
#[derive(Debug)]
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(cap: usize) -> Self {
        Self { in_flight: Mutex::new(0), freed: Condvar::new(), cap: cap.max(1) }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("gate poisoned");
        while *n >= self.cap {
            n = self.freed.wait(n).expect("gate poisoned");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("gate poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Retryable(String),
    Fatal(BackendError),
}

pub struct RemoteBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    gate: Gate,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("cap", &self.gate.cap)
            .finish()
    }
}

impl RemoteBackend {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        max_in_flight: usize,
    ) -> Result<Self, BackendError> {
        let endpoint = endpoint.into();
        let model = model.into();
        if endpoint.trim().is_empty() || model.trim().is_empty() {
            return Err(BackendError::Config("remote backend needs an endpoint and a model name".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Ok(Self { endpoint, model, api_key, agent, gate: Gate::new(max_in_flight) })
    }

    fn attempt(&self, prompt: &Prompt, params: &GenerationParams) -> Result<String, Attempt> {
        let body = ChatRequest {
            model: &self.model,
            messages: [
                Message { role: "system", content: &prompt.system },
                Message { role: "user", content: &prompt.user },
            ],
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let mut req = self
            .agent
            .post(&self.endpoint)
            .config()
            .timeout_global(Some(Duration::from_secs_f64(params.timeout_s)))
            .build()
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        let raw = resp.body_mut().read_to_string().map_err(|e| Attempt::Retryable(e.to_string()))?;
        if status >= 500 || status == 429 {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(Attempt::Fatal(BackendError::Protocol { message: format!("HTTP {status}"), body: raw }));
        }
        extract_content(&raw).map_err(Attempt::Fatal)
    }
}

/// `choices[0].message.content` from a chat-completions payload.
pub fn extract_content(raw: &str) -> Result<String, BackendError> {
    let protocol = |message: &str| BackendError::Protocol { message: message.to_string(), body: raw.to_string() };
    let v: Value = serde_json::from_str(raw).map_err(|_| protocol("response is not JSON"))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| protocol("missing choices[0].message.content"))
}

impl TextBackend for RemoteBackend {
    fn complete(&self, prompt: &Prompt, params: &GenerationParams) -> Result<String, BackendError> {
        let _permit = self.gate.acquire();
        let attempts = params.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = params.backoff_base_s * 2f64.powi(attempt as i32 - 1);
                std::thread::sleep(Duration::from_secs_f64(wait));
            }
            match self.attempt(prompt, params) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(msg)) => {
                    log::warn!("{} attempt {}/{attempts} failed: {msg}", self.endpoint, attempt + 1);
                    last = msg;
                }
            }
        }
        Err(BackendError::Unavailable { attempts, last })
    }

    fn name(&self) -> String {
        format!("remote:{}@{}", self.model, self.endpoint)
    }
}
