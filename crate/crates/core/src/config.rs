//! Run configuration, loaded from a single JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{BackendKind, GenerationParams};
use crate::error::ConfigError;
use crate::meo::MeoTable;
use crate::spatial::{ActivityPoiMap, GravityParams, ModeSpeedTable};
use crate::types::{Vocabulary, DEFAULT_MEMORY_CAP};

/// Where the daily plan comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    /// Narrative first, then a second call turns it into JSON.
    #[default]
    NarrativeParsing,
    /// One call straight to a JSON plan.
    DirectLlm,
    Random,
}

/// How trips pick a transport mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModePolicy {
    #[default]
    Llm,
    Random,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

fn memory_cap() -> usize {
    DEFAULT_MEMORY_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub day_count: u32,
    #[serde(default)]
    pub meo_table: MeoTable,
    #[serde(default)]
    pub gravity: GravityParams,
    #[serde(default)]
    pub mode_speeds: ModeSpeedTable,
    #[serde(default)]
    pub categories: Vocabulary,
    #[serde(default)]
    pub activity_poi_map: ActivityPoiMap,
    pub backend: BackendKind,
    /// Other backends selectable by kind from the command line.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<BackendKind>,
    #[serde(default)]
    pub generation: GenerationParams,
    #[serde(default = "yes")]
    pub rethinking_enabled: bool,
    #[serde(default)]
    pub plan_source: PlanSource,
    #[serde(default)]
    pub mode_choice: ModePolicy,
    #[serde(default = "memory_cap")]
    pub memory_cap: usize,
    /// Profiles file (CSV or JSON).
    pub profiles: PathBuf,
    /// POI file (CSV, TSV, JSON or JSON lines).
    pub pois: PathBuf,
    /// Directory of prompt overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates_dir: Option<PathBuf>,
}

impl SimulationConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| ConfigError::parse(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.profiles);
        fix(&mut self.pois);
        if let Some(dir) = self.templates_dir.as_mut() {
            fix(dir);
        }
        for b in std::iter::once(&mut self.backend).chain(self.alternatives.iter_mut()) {
            if let BackendKind::Mock { script } = b {
                fix(script);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.categories.is_empty() {
            return Err(ConfigError::Invalid("category vocabulary is empty".into()));
        }
        if self.categories.lookup(crate::types::SLEEP).is_none() {
            return Err(ConfigError::Invalid("category vocabulary must contain sleep".into()));
        }
        if self.day_count == 0 {
            return Err(ConfigError::Invalid("day_count must be at least 1".into()));
        }
        self.meo_table.validate()?;
        self.mode_speeds.validate()?;
        let g = &self.gravity;
        if !(g.alpha.is_finite() && g.beta.is_finite() && g.search_radius_m > 0.0 && g.candidate_cap > 0) {
            return Err(ConfigError::Invalid(format!("bad gravity parameters {g:?}")));
        }
        let mut files = vec![("profiles", &self.profiles), ("pois", &self.pois)];
        if let BackendKind::Mock { script } = &self.backend {
            files.push(("mock script", script));
        }
        for (what, p) in files {
            if !p.is_file() {
                return Err(ConfigError::Invalid(format!("{what} file {} does not exist", p.display())));
            }
        }
        if let Some(dir) = &self.templates_dir {
            if !dir.is_dir() {
                return Err(ConfigError::Invalid(format!("templates_dir {} is not a directory", dir.display())));
            }
        }
        Ok(())
    }

    /// Makes the first configured backend of `kind` ("remote" or "mock")
    /// the active one.
    pub fn select_backend(&mut self, kind: &str) -> Result<(), ConfigError> {
        let matches = |b: &BackendKind| match b {
            BackendKind::Remote { .. } => kind == "remote",
            BackendKind::Mock { .. } => kind == "mock",
        };
        if matches(&self.backend) {
            return Ok(());
        }
        let i = self
            .alternatives
            .iter()
            .position(matches)
            .ok_or_else(|| ConfigError::Invalid(format!("no {kind} backend configured")))?;
        std::mem::swap(&mut self.backend, &mut self.alternatives[i]);
        self.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}
