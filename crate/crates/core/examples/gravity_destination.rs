//! Gravity-model destination choice over the fixture POIs.
//!
//! ```text
//! cargo run --example gravity_destination [category]
//! ```

use std::path::PathBuf;

use narrative_mobility::rng::RngStream;
use narrative_mobility::spatial::{
    candidate_pois, gravity_probabilities, sample_destination, GravityParams, PoiDatabase,
};
use narrative_mobility::types::PoiId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let category = std::env::args().nth(1).unwrap_or_else(|| "restaurant".into());
    let db = PoiDatabase::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pois.csv"))?;
    let home = db.resolve(&PoiId::new("home-001"))?;
    let params = GravityParams::default();

    let candidates = candidate_pois(&db, &category, home.location, &params)?;
    let probs = gravity_probabilities(&candidates, &params)?;
    let mut rank: Vec<_> = candidates.iter().zip(&probs).collect();
    rank.sort_by(|a, b| b.1.total_cmp(a.1));
    println!("{} {category} candidates from {}", candidates.len(), home.name);
    for (c, p) in rank.iter().take(8) {
        println!("  {:<28} {:>7.0} m  p={:.3}", c.poi.name, c.distance_m, p);
    }

    let mut rng = RngStream::new(7, "demo", 0);
    let mut hits = std::collections::BTreeMap::new();
    for _ in 0..10_000 {
        *hits.entry(sample_destination(&probs, &candidates, &mut rng).name.clone()).or_insert(0) += 1;
    }
    let top = hits.iter().max_by_key(|(_, n)| **n).map(|(name, n)| format!("{name} ({n})"));
    println!("most drawn in 10000 samples: {}", top.unwrap_or_default());
    Ok(())
}
