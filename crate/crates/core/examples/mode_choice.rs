//! Feasible modes under the space-time budget, then a scripted pick.
//!
//! ```text
//! cargo run --example mode_choice
//! ```

use std::path::PathBuf;

use narrative_mobility::backend::{GenerationParams, MockBackend, MockScript, TemplateSet};
use narrative_mobility::spatial::{available_modes, choose_mode, ModeSpeedTable, PoiDatabase, Trip};
use narrative_mobility::time::TimeOfDay;
use narrative_mobility::types::{ActivityCategory, PersonProfile, PoiId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let db = PoiDatabase::load(&dir.join("pois.csv"))?;
    let backend = MockBackend::new(MockScript::load(&dir.join("lecturer/mock_script.json"))?);
    let speeds = ModeSpeedTable::default();
    let home = db.resolve(&PoiId::new("home-lecturer"))?.place();

    for (owns_car, dest, window) in [
        (true, "campus-office", 4),
        (false, "campus-office", 4),
        (false, "campus-office", 1),
        (true, "lecturer-park", 2),
    ] {
        let profile: PersonProfile = serde_json::from_value(serde_json::json!({
            "id": "demo", "age": 41, "gender": "female", "occupation": "University Lecturer", "income_band": "middle",
            "education": "postgraduate", "owns_car": owns_car, "owns_ebike": false, "home_poi": "home-lecturer"
        }))?;
        let to = db.resolve(&PoiId::new(dest))?;
        let depart = TimeOfDay::parse("07:15")?;
        let trip = Trip { from: &home, to, depart, deadline: depart.saturating_add(window) };
        let modes = available_modes(&trip, &profile, &speeds);
        print!(
            "{dest:<14} {:>6.0} m  car={owns_car:<5} window {:>3} min  feasible {modes:?}",
            trip.distance_m(),
            window * 15
        );
        match choose_mode(
            &trip,
            &ActivityCategory::new("work_study"),
            &profile,
            &speeds,
            &TemplateSet::builtin(),
            &backend,
            &GenerationParams::default(),
        ) {
            Ok(c) => println!("  -> {} ({:?})", c.mode, c.source),
            Err(e) => println!("  -> {e}"),
        }
    }
    Ok(())
}
