//! Full population run under the scripted backend; writes the artifacts.
//!
//! ```text
//! cargo run --example simulate_population [out_dir]
//! ```

use std::path::PathBuf;

use narrative_mobility::config::SimulationConfig;
use narrative_mobility::engine::{simulate_population, Environment};
use narrative_mobility::eval::{daily_unique_locations, radius_of_gyration};
use narrative_mobility::ingest::ingest_profiles;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("nmob-example"), PathBuf::from);
    let config = SimulationConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.json"))?;
    let profiles = ingest_profiles(&config.profiles)?.profiles;
    let mut env = Environment::load(config)?;
    env.register_occupations(&profiles);

    let run = simulate_population(&profiles, &env, None);
    run.write(&out)?;
    let m = &run.manifest;
    println!(
        "{} agents, {} trajectories, {} failures in {} ms",
        m.agents,
        m.trajectories,
        m.failures.len(),
        m.timings.total_ms
    );
    println!("backend calls {:?}", m.backend_calls);
    println!("change decisions {}, notes {:?}", m.change_decisions, m.notes);
    let n = run.trajectories.len() as f64;
    let rg = run.trajectories.iter().map(radius_of_gyration).sum::<f64>() / n;
    let ld = run.trajectories.iter().map(daily_unique_locations).sum::<usize>() as f64 / n;
    println!("mean radius of gyration {rg:.0} m, mean distinct places {ld:.2}");
    println!("artifacts in {}", out.display());
    Ok(())
}
