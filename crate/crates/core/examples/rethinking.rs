//! The MEO gate and a scripted change of plan.
//!
//! ```text
//! cargo run --example rethinking
//! ```

use narrative_mobility::backend::{GenerationParams, MockBackend, MockRule, MockScript, TemplateSet};
use narrative_mobility::meo::{MeoTable, OccupationCategory, DEFAULT_BANDS};
use narrative_mobility::planner::{plan_durations, plan_from_reply};
use narrative_mobility::reflect::{apply_decision, rethink, should_rethink};
use narrative_mobility::rng::RngStream;
use narrative_mobility::spatial::ActivityPoiMap;
use narrative_mobility::time::TimeOfDay;
use narrative_mobility::types::{AgentState, PersonProfile, PoiId, Vocabulary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = MeoTable::default();
    for (_, names) in DEFAULT_BANDS {
        let occ = OccupationCategory::new(names[0]);
        let mut rng = RngStream::new(1, names[0], 0);
        let fired = (0..10_000).filter(|_| should_rethink(&occ, &table, &mut rng)).count();
        println!("{:<18} MEO {:.2}  fired {:>5} / 10000", names[0], table.get(&occ).unwrap_or_default(), fired);
    }

    let profile: PersonProfile = serde_json::from_value(serde_json::json!({
        "id": "demo", "age": 52, "gender": "male", "occupation": "Business Owner", "income_band": "high",
        "education": "tertiary", "owns_car": true, "owns_ebike": false, "home_poi": "home-001"
    }))?;
    let vocab = Vocabulary::default();
    let map = ActivityPoiMap::default();
    let (plan, _) = plan_from_reply(
        r#"{"plan": [{"activity": "sleep", "start_time": "00:00"}, {"activity": "work_study", "start_time": "09:00"},
            {"activity": "eating", "start_time": "12:30"}, {"activity": "work_study", "start_time": "13:30"},
            {"activity": "sleep", "start_time": "23:00"}]}"#,
        &vocab,
        &map,
    )?;
    let schedule = plan_durations(&plan, TimeOfDay::DAY_END).items;

    let backend = MockBackend::new(MockScript::default_only("{}").with_rule(MockRule::on_template(
        "rethink",
        r#"{"action": "change", "new_activity": "social", "duration_minutes": 90, "reasoning": "A client asked to meet for lunch."}"#,
    )));
    let mut state = AgentState::new(PoiId::new("home-001"), 10);
    state.now = schedule[2].start;
    let decision = rethink(
        &state,
        &schedule[2],
        &profile,
        &vocab,
        &TemplateSet::builtin(),
        &backend,
        &GenerationParams::default(),
    );
    println!(
        "\ndecision at {}: {:?} -> {:?} for {:?} min",
        state.now, decision.action, decision.new_activity, decision.duration_minutes
    );
    for item in apply_decision(&schedule, 2, &decision, &map) {
        println!("{}-{}  {}", item.start, item.end, item.activity.intention);
    }
    Ok(())
}
