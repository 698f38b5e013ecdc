use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeError {
    #[error("malformed time {input:?}: bad token {token:?}")]
    Malformed { input: String, token: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("coordinates out of range: lat {lat}, lon {lon}")]
    OutOfRange { lat: f64, lon: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("template {template}: missing binding for placeholder {{{name}}}")]
    MissingBinding { template: String, name: String },
    #[error("template override {path}: {reason}")]
    BadOverride { path: PathBuf, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempt(s): {last}")]
    Unavailable { attempts: u32, last: String },
    #[error("protocol error: {message}")]
    Protocol { message: String, body: String },
    #[error("scripted failure: {0}")]
    Scripted(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no balanced JSON object in model output near {excerpt:?}")]
pub struct ExtractError {
    pub excerpt: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("narrative is empty")]
    EmptyNarrative,
    #[error("plan must contain at least one activity")]
    EmptyPlan,
    #[error("first activity must be sleep at 00:00")]
    MissingLeadingSleep,
    #[error("activity starts are not in chronological order at index {0}")]
    Unsorted(usize),
    #[error("unknown activity category {0:?}")]
    UnknownCategory(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("no POI of category {0:?} anywhere in the city")]
    EmptyCategory(String),
    #[error("unknown POI id {0:?}")]
    UnknownPoi(String),
    #[error("non-finite gravity weight for candidate {0:?}")]
    NonFinite(String),
    #[error("empty candidate set")]
    NoCandidates,
    #[error("no transport mode reaches the destination in time ({distance_m:.0} m in {budget_s:.0} s)")]
    NoFeasibleMode { distance_m: f64, budget_s: f64 },
    #[error("invalid POI record: {0}")]
    InvalidPoi(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distribution supports differ")]
    SupportMismatch,
    #[error("value {value} for {name} outside [0, 1]")]
    OutOfRange { name: String, value: f64 },
    #[error("unknown activity category {0:?}")]
    UnknownCategory(String),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Parse { path: path.into(), message: message.to_string() }
    }
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
