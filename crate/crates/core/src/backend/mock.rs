//! Scripted offline backend.
//!
//! A script is a list of rules checked in order; the first rule whose
//! matchers all hold answers the prompt. A rule with no matcher is a
//! catch-all. The file is either a JSON array of rules or an object
//! `{"rules": [...], "default": "..."}`.
//!
//! ```json
//! [
//!   {"template": "mode_choice", "match": "Driving", "response": "{\"choice\": \"Driving\"}"},
//!   {"match": "Purpose of trip", "responses": ["{\"choice\": \"Walking\"}", "{\"choice\": \"Bus\"}"]},
//!   {"match": "agent-007", "fail": "injected outage"},
//!   {"response": "fallback text"}
//! ]
//! ```
//!
//! With `responses`, the pick is a hash of the rendered prompt, so different
//! agents can get different canned answers while every call stays a pure
//! function of (script, prompt).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GenerationParams, Prompt, TextBackend};
use crate::error::{BackendError, ConfigError};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<String>,
}

impl MockRule {
    pub fn on_text(pattern: impl Into<String>, response: impl Into<String>) -> Self {
        Self { pattern: Some(pattern.into()), response: Some(response.into()), ..Self::default() }
    }

    pub fn on_template(template: impl Into<String>, response: impl Into<String>) -> Self {
        Self { template: Some(template.into()), response: Some(response.into()), ..Self::default() }
    }

    pub fn failing(pattern: impl Into<String>, message: impl Into<String>) -> Self {
        Self { pattern: Some(pattern.into()), fail: Some(message.into()), ..Self::default() }
    }

    fn matches(&self, prompt: &Prompt) -> bool {
        let template_ok = self.template.as_deref().is_none_or(|t| t == prompt.template);
        let text_ok = self.pattern.as_deref().is_none_or(|p| prompt.system.contains(p) || prompt.user.contains(p));
        template_ok && text_ok
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

impl MockScript {
    pub fn default_only(response: impl Into<String>) -> Self {
        Self { rules: Vec::new(), default: Some(response.into()) }
    }

    pub fn with_rule(mut self, rule: MockRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            Rules(Vec<MockRule>),
            Full(MockScript),
        }
        Ok(match serde_json::from_str::<File>(text)? {
            File::Rules(rules) => Self { rules, default: None },
            File::Full(s) => s,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        Self::from_json(&text).map_err(|e| ConfigError::parse(path, e))
    }

    /// The reply for a prompt, or the scripted failure.
    pub fn respond(&self, prompt: &Prompt) -> Result<String, BackendError> {
        for rule in &self.rules {
            if !rule.matches(prompt) {
                continue;
            }
            if let Some(msg) = &rule.fail {
                return Err(BackendError::Scripted(msg.clone()));
            }
            if !rule.responses.is_empty() {
                let i = (prompt_hash(prompt) % rule.responses.len() as u64) as usize;
                return Ok(rule.responses[i].clone());
            }
            if let Some(r) = &rule.response {
                return Ok(r.clone());
            }
        }
        self.default
            .clone()
            .ok_or_else(|| BackendError::Scripted(format!("no mock rule matched template {}", prompt.template)))
    }
}

/// FNV-1a over the rendered prompt.
fn prompt_hash(prompt: &Prompt) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in prompt.system.bytes().chain([0u8]).chain(prompt.user.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Backend answering from a [`MockScript`]. Counts calls per template name.
#[derive(Debug, Default)]
pub struct MockBackend {
    script: MockScript,
    calls: Mutex<BTreeMap<String, usize>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self { script, calls: Mutex::new(BTreeMap::new()) }
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    pub fn calls_for(&self, template: &str) -> usize {
        self.calls.lock().expect("call counter poisoned").get(template).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> usize {
        self.calls.lock().expect("call counter poisoned").values().sum()
    }
}

impl TextBackend for MockBackend {
    fn complete(&self, prompt: &Prompt, _params: &GenerationParams) -> Result<String, BackendError> {
        *self.calls.lock().expect("call counter poisoned").entry(prompt.template.clone()).or_insert(0) += 1;
        self.script.respond(prompt)
    }

    fn name(&self) -> String {
        "mock".to_string()
    }

    fn calls_for(&self, template: &str) -> Option<usize> {
        Some(MockBackend::calls_for(self, template))
    }
}
