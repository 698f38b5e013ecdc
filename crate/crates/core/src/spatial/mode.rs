//! Transport mode choice for a single trip.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::poi::Poi;
use super::prism::ModeSpeedTable;
use crate::backend::template::{self, bindings, TemplateSet};
use crate::backend::{extract_json_block, parse_relaxed, GenerationParams, TextBackend};
use crate::error::SpatialError;
use crate::geo::haversine_m;
use crate::rng::RngStream;
use crate::time::TimeOfDay;
use crate::types::{ActivityCategory, PersonProfile, Place, TransportMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSource {
    /// The model named an available mode.
    Model,
    /// The reply was unusable; the fastest available mode was taken.
    Fallback,
    /// Uniform draw, no model involved.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeChoice {
    pub mode: TransportMode,
    pub reasoning: String,
    pub source: ModeSource,
}

/// One leg between two places with its time window.
#[derive(Clone, Debug)]
pub struct Trip<'a> {
    pub from: &'a Place,
    pub to: &'a Poi,
    pub depart: TimeOfDay,
    pub deadline: TimeOfDay,
}

impl Trip<'_> {
    pub fn distance_m(&self) -> f64 {
        haversine_m(self.from.point, self.to.location)
    }
}

/// Modes the profile may use that also make the trip within its window.
pub fn available_modes(trip: &Trip<'_>, profile: &PersonProfile, speeds: &ModeSpeedTable) -> Vec<TransportMode> {
    let distance = trip.distance_m();
    let budget = trip.deadline.seconds_since(trip.depart);
    TransportMode::permitted(profile.owns_car, profile.owns_ebike)
        .into_iter()
        .filter(|m| speeds.travel_seconds(distance, *m) <= budget)
        .collect()
}

/// Reads the model's pick; `None` unless it names one of `available`.
pub fn mode_from_reply(reply: &str, available: &[TransportMode]) -> Option<(TransportMode, String)> {
    let (choice, reasoning) = match extract_json_block(reply).ok().and_then(parse_relaxed) {
        Some(v) => (
            v.get("choice").and_then(Value::as_str)?.to_string(),
            v.get("reasoning").and_then(Value::as_str).unwrap_or_default().to_string(),
        ),
        None => (reply.trim().to_string(), String::new()),
    };
    let mode = TransportMode::from_reply(&choice)?;
    available.contains(&mode).then_some((mode, reasoning))
}

/// Asks the backend how to travel. An unusable reply or a backend failure
/// falls back to the fastest available mode.
#[allow(clippy::too_many_arguments)]
pub fn choose_mode(
    trip: &Trip<'_>,
    activity: &ActivityCategory,
    profile: &PersonProfile,
    speeds: &ModeSpeedTable,
    templates: &TemplateSet,
    backend: &dyn TextBackend,
    params: &GenerationParams,
) -> Result<ModeChoice, SpatialError> {
    let available = available_modes(trip, profile, speeds);
    let fastest = speeds.fastest(&available).ok_or(SpatialError::NoFeasibleMode {
        distance_m: trip.distance_m(),
        budget_s: trip.deadline.seconds_since(trip.depart),
    })?;
    let options = available.iter().map(|m| m.display_name()).collect::<Vec<_>>().join(", ");
    let vars = bindings([
        ("character_profile", profile.describe()),
        ("destination_poi_name", trip.to.name.clone()),
        ("destination_poi_type", trip.to.category.clone()),
        ("activity_type", activity.to_string()),
        ("distance", format!("{:.0}", trip.distance_m())),
        ("formatted_time", trip.depart.to_string()),
        ("available_options", options),
    ]);
    let reply = templates
        .render(template::MODE_CHOICE, &vars)
        .map_err(|e| e.to_string())
        .and_then(|p| backend.complete(&p, params).map_err(|e| e.to_string()));
    Ok(match reply.as_deref().map(|r| mode_from_reply(r, &available)) {
        Ok(Some((mode, reasoning))) => ModeChoice { mode, reasoning, source: ModeSource::Model },
        Ok(None) => ModeChoice { mode: fastest, reasoning: "unusable reply".into(), source: ModeSource::Fallback },
        Err(e) => ModeChoice { mode: fastest, reasoning: e.clone(), source: ModeSource::Fallback },
    })
}

/// Uniform pick among `available`.
pub fn random_mode(available: &[TransportMode], rng: &mut RngStream) -> Option<TransportMode> {
    (!available.is_empty()).then(|| available[rng.index(available.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{MockBackend, MockScript};
    use crate::geo::{unproject_local, GeoPoint};
    use crate::types::PoiId;

    fn profile(car: bool, ebike: bool) -> PersonProfile {
        serde_json::from_value(serde_json::json!({
            "id": "p", "age": 40, "gender": "male", "occupation": "Engineer", "income_band": "middle",
            "education": "tertiary", "owns_car": car, "owns_ebike": ebike, "home_poi": "h"
        }))
        .unwrap()
    }

    fn setup(distance: f64) -> (Place, Poi) {
        let o = GeoPoint { lat: 23.1, lon: 113.3 };
        let from = Place { poi_id: PoiId::new("h"), point: o };
        let to = Poi {
            id: PoiId::new("d"),
            name: "Corner Cafe".into(),
            category: "cafe".into(),
            location: unproject_local(o, distance, 0.0),
            attractiveness: 1.0,
        };
        (from, to)
    }

    fn run(reply: &str, distance: f64, p: &PersonProfile) -> (ModeChoice, std::sync::Arc<MockBackend>) {
        let (from, to) = setup(distance);
        let trip = Trip {
            from: &from,
            to: &to,
            depart: TimeOfDay::parse("08:00").unwrap(),
            deadline: TimeOfDay::parse("10:00").unwrap(),
        };
        let backend = std::sync::Arc::new(MockBackend::new(MockScript::default_only(reply)));
        let c = choose_mode(
            &trip,
            &ActivityCategory::new("eating"),
            p,
            &ModeSpeedTable::default(),
            &TemplateSet::builtin(),
            backend.as_ref(),
            &GenerationParams::default(),
        )
        .unwrap();
        (c, backend)
    }

    #[test]
    fn walking_reply_for_short_trip() {
        let (c, b) = run(r#"{"choice":"Walking", "reasoning":"short distance"}"#, 300.0, &profile(false, false));
        assert_eq!((c.mode, c.source), (TransportMode::Walk, ModeSource::Model));
        assert_eq!(c.reasoning, "short distance");
        assert_eq!(b.calls_for(template::MODE_CHOICE), 1);
    }

    #[test]
    fn invalid_reply_falls_back_to_fastest() {
        let (c, _) = run("teleport", 5000.0, &profile(true, false));
        assert_eq!((c.mode, c.source), (TransportMode::Subway, ModeSource::Fallback));
        let (c, _) = run(r#"{"choice": "Driving"}"#, 5000.0, &profile(false, false));
        assert_eq!(c.source, ModeSource::Fallback, "driving is not available without a car");
    }

    #[test]
    fn options_follow_resources() {
        let (from, to) = setup(3000.0);
        let trip = Trip {
            from: &from,
            to: &to,
            depart: TimeOfDay::parse("08:00").unwrap(),
            deadline: TimeOfDay::parse("09:00").unwrap(),
        };
        let speeds = ModeSpeedTable::default();
        for (car, ebike) in [(false, false), (true, false), (false, true), (true, true)] {
            let avail = available_modes(&trip, &profile(car, ebike), &speeds);
            assert_eq!(avail.contains(&TransportMode::Car), car);
            assert_eq!(avail.contains(&TransportMode::Ebike), ebike);
        }
        // 3 km in 15 minutes rules out walking (2143 s); bike, bus and subway fit
        let tight = Trip { deadline: TimeOfDay::parse("08:15").unwrap(), ..trip.clone() };
        let avail = available_modes(&tight, &profile(false, false), &speeds);
        assert_eq!(avail, [TransportMode::Bike, TransportMode::Bus, TransportMode::Subway]);
    }

    #[test]
    fn rendered_prompt_has_no_driving_without_car() {
        let (_, b) = run(r#"{"choice":"Bus"}"#, 2000.0, &profile(false, false));
        assert_eq!(b.calls_for(template::MODE_CHOICE), 1);
        let script = MockScript::default_only("x")
            .with_rule(crate::backend::MockRule::on_text("Driving", r#"{"choice":"Driving"}"#));
        let b = MockBackend::new(script);
        let (from, to) = setup(2000.0);
        let trip = Trip {
            from: &from,
            to: &to,
            depart: TimeOfDay::parse("08:00").unwrap(),
            deadline: TimeOfDay::parse("10:00").unwrap(),
        };
        let c = choose_mode(
            &trip,
            &ActivityCategory::new("eating"),
            &profile(false, false),
            &ModeSpeedTable::default(),
            &TemplateSet::builtin(),
            &b,
            &GenerationParams::default(),
        )
        .unwrap();
        // the Driving rule would only fire if the word were in the prompt
        assert_eq!(c.source, ModeSource::Fallback);
    }

    #[test]
    fn no_feasible_mode() {
        let (from, to) = setup(50_000.0);
        let trip = Trip {
            from: &from,
            to: &to,
            depart: TimeOfDay::parse("08:00").unwrap(),
            deadline: TimeOfDay::parse("08:15").unwrap(),
        };
        let b = MockBackend::new(MockScript::default_only("x"));
        let r = choose_mode(
            &trip,
            &ActivityCategory::new("eating"),
            &profile(true, true),
            &ModeSpeedTable::default(),
            &TemplateSet::builtin(),
            &b,
            &GenerationParams::default(),
        );
        assert!(matches!(r, Err(SpatialError::NoFeasibleMode { .. })));
        assert_eq!(b.total_calls(), 0);
    }

    #[test]
    fn random_mode_is_uniform_and_permitted() {
        let mut rng = RngStream::new(4, "rm", 0);
        assert_eq!(random_mode(&[TransportMode::Bus], &mut rng), Some(TransportMode::Bus));
        assert_eq!(random_mode(&[], &mut rng), None);
        let avail = [TransportMode::Walk, TransportMode::Bus];
        let n = 10_000;
        let walks = (0..n).filter(|_| random_mode(&avail, &mut rng) == Some(TransportMode::Walk)).count();
        assert!((walks as f64 / n as f64 - 0.5).abs() < 0.015);
    }
}
