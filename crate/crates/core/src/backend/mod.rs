//! Text-generation backends and prompt plumbing.

pub mod json;
pub mod mock;
pub mod remote;
pub mod template;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use json::{extract_json_block, parse_relaxed};
pub use mock::{MockBackend, MockRule, MockScript};
pub use remote::RemoteBackend;
pub use template::{Prompt, PromptTemplate, TemplateSet};

use crate::error::{BackendError, ConfigError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_s: f64,
    /// Retries after the first attempt on transport errors and 5xx replies.
    pub max_retries: u32,
    /// First backoff delay; doubles on every further retry.
    pub backoff_base_s: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self { temperature: 1.0, max_tokens: 1024, timeout_s: 60.0, max_retries: 2, backoff_base_s: 1.0 }
    }
}

impl GenerationParams {
    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..self.clone() }
    }
}

pub trait TextBackend: Send + Sync {
    fn complete(&self, prompt: &Prompt, params: &GenerationParams) -> Result<String, BackendError>;

    fn name(&self) -> String;

    /// Calls observed for a template, when the backend tracks them.
    fn calls_for(&self, _template: &str) -> Option<usize> {
        None
    }
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

fn default_key_env() -> String {
    "NMOB_API_KEY".to_string()
}

fn default_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendKind {
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_key_env")]
        api_key_env: String,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
    Mock {
        script: PathBuf,
    },
}

impl BackendKind {
    pub fn build(&self) -> Result<Arc<dyn TextBackend>, ConfigError> {
        match self {
            BackendKind::Remote { endpoint, model, api_key_env, max_in_flight } => {
                let key = std::env::var(api_key_env).ok();
                let b = RemoteBackend::new(endpoint.clone(), model.clone(), key, *max_in_flight)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(Arc::new(b))
            }
            BackendKind::Mock { script } => Ok(Arc::new(MockBackend::new(MockScript::load(script)?))),
        }
    }
}

/// One-shot completion through a freshly built backend.
pub fn complete(kind: &BackendKind, system: &str, user: &str, params: &GenerationParams) -> crate::Result<String> {
    let backend = kind.build()?;
    let prompt = Prompt { template: String::new(), system: system.to_string(), user: user.to_string() };
    Ok(backend.complete(&prompt, params)?)
}
