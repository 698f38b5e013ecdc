//! Micro level: grounding activities to POIs and choosing how to get there.

pub mod category_map;
pub mod gravity;
pub mod mode;
pub mod poi;
pub mod prism;

pub use category_map::ActivityPoiMap;
pub use gravity::{candidate_pois, gravity_probabilities, sample_destination, Candidate, GravityParams};
pub use mode::{available_modes, choose_mode, random_mode, ModeChoice, ModeSource, Trip};
pub use poi::{Poi, PoiDatabase};
pub use prism::{prism_feasible, ModeSpeedTable};
