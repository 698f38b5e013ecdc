//! Synthetic daily mobility from LLM-driven agents.
//!
//! A profile becomes a first-person diary narrative, the narrative becomes a
//! structured activity plan, and the plan is executed slot by slot: agents
//! may reconsider their next activity, pick a destination with a gravity
//! model and choose how to travel there. Generated populations are scored
//! against reference diaries with Jensen-Shannon divergence.

pub mod backend;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod eval;
pub mod geo;
pub mod ingest;
pub mod meo;
pub mod planner;
pub mod reflect;
pub mod rng;
pub mod spatial;
pub mod time;
pub mod types;

pub use error::{Error, Result};
