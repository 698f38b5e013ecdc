//! Runs the five configurations and scores each against the reference diaries.
//!
//! ```text
//! cargo run --example ablations
//! ```

use std::path::PathBuf;

use narrative_mobility::config::SimulationConfig;
use narrative_mobility::engine::{simulate_population, Ablation, Environment};
use narrative_mobility::eval::{evaluate, EvalConfig};
use narrative_mobility::ingest::{ingest_diaries, ingest_profiles};
use narrative_mobility::spatial::PoiDatabase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let base = SimulationConfig::load(&fixtures.join("config.json"))?;
    let profiles = ingest_profiles(&base.profiles)?.profiles;
    let db = PoiDatabase::load(&base.pois)?;
    let (diaries, _) = ingest_diaries(&fixtures.join("reference_diaries.jsonl"), &base.categories, Some(&db))?;
    let reference: Vec<_> = diaries.iter().map(|d| d.to_trajectory()).collect();
    let cfg = EvalConfig { categories: base.categories.clone(), ..EvalConfig::default() };

    println!(
        "{:<14} {:>9} {:>9} {:>9} {:>9} {:>7} {:>8}",
        "ablation", "intent", "locs", "mode", "radius", "score", "changes"
    );
    for a in Ablation::ALL {
        let mut config = base.clone();
        a.apply(&mut config);
        let mut env = Environment::load(config)?;
        env.register_occupations(&profiles);
        let run = simulate_population(&profiles, &env, Some(a));
        let r = evaluate(&run.trajectories, &reference, &cfg)?;
        println!(
            "{:<14} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>7.3} {:>8}",
            a.as_str(),
            r.jsd_intention,
            r.jsd_locations,
            r.jsd_mode,
            r.jsd_radius,
            r.final_score,
            run.manifest.change_decisions
        );
    }
    Ok(())
}
