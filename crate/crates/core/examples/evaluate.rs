//! Scores a simulated population against the reference diaries.
//!
//! ```text
//! cargo run --example evaluate
//! ```

use std::path::PathBuf;

use narrative_mobility::config::SimulationConfig;
use narrative_mobility::engine::{simulate_population, Environment};
use narrative_mobility::eval::{evaluate, EvalConfig};
use narrative_mobility::ingest::{ingest_diaries, ingest_profiles};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let config = SimulationConfig::load(&fixtures.join("config.json"))?;
    let profiles = ingest_profiles(&config.profiles)?.profiles;
    let mut env = Environment::load(config.clone())?;
    env.register_occupations(&profiles);
    let generated = simulate_population(&profiles, &env, None).trajectories;

    let (diaries, report) =
        ingest_diaries(&fixtures.join("reference_diaries.jsonl"), &config.categories, Some(&env.db))?;
    println!("reference: {} of {} diaries accepted", report.accepted, report.input);
    let reference: Vec<_> = diaries.iter().map(|d| d.to_trajectory()).collect();

    let cfg = EvalConfig { categories: config.categories.clone(), ..EvalConfig::default() };
    let r = evaluate(&generated, &reference, &cfg)?;
    println!(
        "JSD intention {:.3}  locations {:.3}  mode {:.3}  radius {:.3}",
        r.jsd_intention, r.jsd_locations, r.jsd_mode, r.jsd_radius
    );
    println!("final score {:.3}", r.final_score);
    let modes = &r.distributions["mode"];
    for (i, label) in modes.generated.labels.iter().enumerate() {
        println!(
            "  {label:<7} generated {:.3}  reference {:.3}",
            modes.generated.probabilities[i], modes.reference.probabilities[i]
        );
    }
    Ok(())
}
