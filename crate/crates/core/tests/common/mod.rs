#![allow(dead_code)]

use std::path::PathBuf;

use narrative_mobility::config::SimulationConfig;
use narrative_mobility::engine::Environment;
use narrative_mobility::geo::GeoPoint;
use narrative_mobility::ingest::ingest_profiles;
use narrative_mobility::time::TimeOfDay;
use narrative_mobility::types::{
    ActivityCategory, PersonProfile, Place, PlannedActivity, PoiId, Trajectory, TrajectoryRecord, TransportMode,
    Vocabulary,
};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Loads a fixture config with its environment and profiles.
pub fn load_world(config_rel: &str) -> (SimulationConfig, Environment, Vec<PersonProfile>) {
    let config = SimulationConfig::load(&fixture(config_rel)).expect("fixture config loads");
    let profiles = ingest_profiles(&config.profiles).expect("fixture profiles load").profiles;
    let mut env = Environment::load(config.clone()).expect("fixture environment loads");
    env.register_occupations(&profiles);
    (config, env, profiles)
}

pub fn record(
    intention: &str,
    poi: &str,
    point: GeoPoint,
    mode: Option<TransportMode>,
    start: u8,
    end: u8,
) -> TrajectoryRecord {
    TrajectoryRecord {
        activity: PlannedActivity {
            intention: ActivityCategory::new(intention),
            start: TimeOfDay::bound(start).unwrap(),
            location_category: String::new(),
            description: String::new(),
        },
        place: Place { poi_id: PoiId::new(poi), point },
        mode,
        start: TimeOfDay::bound(start).unwrap(),
        arrive: TimeOfDay::bound(start).unwrap(),
        end: TimeOfDay::bound(end).unwrap(),
    }
}

/// A tiled day with random cut points, places and modes. Places are drawn
/// from a small pool so revisits happen.
pub fn random_trajectory(rng: &mut impl Rng, id: usize, vocab: &Vocabulary) -> Trajectory {
    let pool: Vec<(String, GeoPoint)> = (0..rng.gen_range(1..=25))
        .map(|i| {
            let p = GeoPoint { lat: 23.0 + rng.gen_range(-0.2..0.2), lon: 113.3 + rng.gen_range(-0.2..0.2) };
            (format!("poi-{i}"), p)
        })
        .collect();
    let n = rng.gen_range(1..=24);
    let mut cuts: Vec<u8> = (0..n - 1).map(|_| rng.gen_range(1..96)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bounds = vec![0u8];
    bounds.extend(cuts);
    bounds.push(96);
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    for w in bounds.windows(2) {
        let (poi, point) = pool[rng.gen_range(0..pool.len())].clone();
        let cat = vocab.get(rng.gen_range(0..vocab.len())).unwrap().as_str().to_string();
        let moved = records.last().is_some_and(|r| r.place.poi_id.as_str() != poi);
        let mode = moved.then(|| TransportMode::ALL[rng.gen_range(0..6)]);
        records.push(record(&cat, &poi, point, mode, w[0], w[1]));
    }
    Trajectory { agent_id: format!("r{id:03}"), day: 0, records }
}
