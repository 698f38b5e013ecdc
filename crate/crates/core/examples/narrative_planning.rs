//! Profile → diary → structured plan, using the scripted lecturer backend.
//!
//! ```text
//! cargo run --example narrative_planning
//! ```

use std::path::PathBuf;

use narrative_mobility::backend::{GenerationParams, MockBackend, MockScript, TemplateSet};
use narrative_mobility::ingest::ingest_profiles;
use narrative_mobility::planner::{generate_narrative, parse_plan, plan_durations};
use narrative_mobility::spatial::ActivityPoiMap;
use narrative_mobility::time::TimeOfDay;
use narrative_mobility::types::Vocabulary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/lecturer");
    let profile = ingest_profiles(&dir.join("profiles.json"))?.profiles.remove(0);
    let backend = MockBackend::new(MockScript::load(&dir.join("mock_script.json"))?);
    let templates = TemplateSet::builtin();
    let params = GenerationParams::default();

    println!("{}\n", profile.describe());
    let narrative = generate_narrative(&profile, &templates, &backend, &params)?;
    println!("{}\n", narrative.text);

    let vocab = Vocabulary::default();
    let report = parse_plan(&narrative, &vocab, &ActivityPoiMap::default(), &templates, &backend, &params)?;
    let plan = report.plan.ok_or("plan rejected")?;
    println!("repairs: {:?}", report.repairs);
    for item in plan_durations(&plan, TimeOfDay::DAY_END).items {
        println!("{}-{}  {:<11} {}", item.start, item.end, item.activity.intention, item.activity.description);
    }
    Ok(())
}
