//! Macro level: profile → diary narrative → validated activity plan.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backend::template::{self, bindings, TemplateSet};
use crate::backend::{extract_json_block, parse_relaxed, GenerationParams, TextBackend};
use crate::error::PlanError;
use crate::spatial::ActivityPoiMap;
use crate::time::{parse_clock_minutes, TimeOfDay, SLOT_MINUTES};
use crate::types::{ActivityCategory, ActivityPlan, PersonProfile, PlannedActivity, Vocabulary, SLEEP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Narrative {
    pub profile_id: String,
    pub text: String,
    pub backend: String,
    pub temperature: f64,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    /// True when the text is the canned occupation default.
    #[serde(default)]
    pub fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Repair {
    ReSorted,
    SnappedToGrid,
    InjectedSleep,
    CategoryCoerced,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanParseReport {
    pub plan: Option<ActivityPlan>,
    pub repairs: Vec<Repair>,
    /// A second prompt carrying the validator's complaint was needed.
    pub reprompted: bool,
    pub rejected: Option<String>,
}

impl PlanParseReport {
    pub fn is_accepted(&self) -> bool {
        self.rejected.is_none() && self.plan.is_some()
    }
}

fn now_secs() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Asks the backend, as a diarist, for a first-person account of the day.
pub fn generate_narrative(
    profile: &PersonProfile,
    templates: &TemplateSet,
    backend: &dyn TextBackend,
    params: &GenerationParams,
) -> Result<Narrative, PlanError> {
    let prompt = templates
        .render(template::NARRATIVE, &bindings([("character_profile", profile.describe())]))
        .map_err(crate::error::BackendError::from)?;
    let text = backend.complete(&prompt, params)?;
    if text.trim().is_empty() {
        return Err(PlanError::EmptyNarrative);
    }
    Ok(Narrative {
        profile_id: profile.id.clone(),
        text,
        backend: backend.name(),
        temperature: params.temperature,
        generated_at: now_secs(),
        fallback: false,
    })
}

/// Canned diary used when narrative generation fails.
pub fn fallback_narrative(profile: &PersonProfile) -> Narrative {
    let text = if profile.is_working() {
        "I slept until about 7:00 AM and had breakfast at home. Around 8:00 AM I went to work and \
         stayed busy until lunch at 12:00. In the afternoon I was back at work. At 6:00 PM I relaxed \
         for a while, and I went to bed around 10:00 PM."
    } else {
        "I slept until about 7:30 AM and had breakfast at home. Around 9:00 AM I went out for a walk \
         and some errands. I ate lunch at 12:00, spent the afternoon relaxing, and went to bed around \
         10:00 PM."
    };
    Narrative {
        profile_id: profile.id.clone(),
        text: text.to_string(),
        backend: "fallback".to_string(),
        temperature: 0.0,
        generated_at: now_secs(),
        fallback: true,
    }
}

/// Worked example shown to the extractor, drawn from the active vocabulary.
pub fn example_json(categories: &Vocabulary) -> String {
    let pick = |want: &str, fallback: usize| {
        categories
            .lookup(want)
            .or_else(|| categories.get(fallback))
            .map(|c| c.as_str().to_string())
            .unwrap_or_else(|| want.to_string())
    };
    let example = serde_json::json!({
        "plan": [
            {"activity": SLEEP, "start_time": "00:00", "description": "Sleeping at home"},
            {"activity": pick("eating", 1), "start_time": "07:30", "description": "Breakfast at home"},
            {"activity": pick("work_study", 2), "start_time": "08:30", "description": "Working at the office"},
        ]
    });
    serde_json::to_string_pretty(&example).expect("static json")
}

/// Turns the extractor's reply into a plan, applying the normalizations the
/// format allows and rejecting anything else with a message suitable for a
/// corrective re-prompt.
pub fn plan_from_reply(
    reply: &str,
    categories: &Vocabulary,
    poi_map: &ActivityPoiMap,
) -> Result<(ActivityPlan, Vec<Repair>), String> {
    let block = extract_json_block(reply).map_err(|e| e.to_string())?;
    let value = parse_relaxed(block).ok_or_else(|| "the reply is not valid JSON".to_string())?;
    let items = value
        .get("plan")
        .and_then(Value::as_array)
        .ok_or_else(|| "the JSON object must have a key \"plan\" holding an array".to_string())?;
    if items.is_empty() {
        return Err("the \"plan\" array is empty".into());
    }

    let mut repairs = Vec::new();
    let note = |r: Repair, repairs: &mut Vec<Repair>| {
        if !repairs.contains(&r) {
            repairs.push(r);
        }
    };
    let mut activities = Vec::with_capacity(items.len() + 1);
    for (i, item) in items.iter().enumerate() {
        let field = |k: &str| item.get(k).and_then(Value::as_str);
        let name = field("activity").ok_or_else(|| format!("plan[{i}] lacks a string \"activity\""))?;
        let category = categories.lookup(name).ok_or_else(|| {
            format!("plan[{i}].activity {name:?} is not one of the categories: {}", categories.listing())
        })?;
        if category.as_str() != name {
            note(Repair::CategoryCoerced, &mut repairs);
        }
        let raw_time = field("start_time").ok_or_else(|| format!("plan[{i}] lacks a string \"start_time\""))?;
        let minutes = parse_clock_minutes(raw_time).map_err(|e| format!("plan[{i}].start_time: {e}"))?;
        let start = TimeOfDay::nearest(minutes);
        if start.minutes() != minutes {
            note(Repair::SnappedToGrid, &mut repairs);
        }
        activities.push(PlannedActivity {
            intention: category.clone(),
            start,
            location_category: poi_map.poi_category(category),
            description: field("description").unwrap_or_default().trim().to_string(),
        });
    }

    if activities.windows(2).any(|w| w[1].start < w[0].start) {
        activities.sort_by_key(|a| a.start);
        note(Repair::ReSorted, &mut repairs);
    }

    let first = &activities[0];
    if !(first.intention.is_sleep() && first.start == TimeOfDay::MIDNIGHT) {
        if first.intention.is_sleep() {
            activities[0].start = TimeOfDay::MIDNIGHT;
        } else {
            let sleep =
                categories.lookup(SLEEP).cloned().ok_or_else(|| "the category list has no \"sleep\"".to_string())?;
            activities.insert(
                0,
                PlannedActivity {
                    location_category: poi_map.poi_category(&sleep),
                    intention: sleep,
                    start: TimeOfDay::MIDNIGHT,
                    description: String::new(),
                },
            );
        }
        note(Repair::InjectedSleep, &mut repairs);
    }

    if activities.len() < 2 {
        return Err("the plan needs at least two activities".into());
    }
    let plan = ActivityPlan::new(activities).map_err(|e| e.to_string())?;
    Ok((plan, repairs))
}

fn validate_with_repair(
    first_reply: String,
    reprompt: impl FnOnce(&str) -> Result<String, PlanError>,
    categories: &Vocabulary,
    poi_map: &ActivityPoiMap,
) -> Result<PlanParseReport, PlanError> {
    let first_err = match plan_from_reply(&first_reply, categories, poi_map) {
        Ok((plan, repairs)) => {
            return Ok(PlanParseReport { plan: Some(plan), repairs, reprompted: false, rejected: None })
        }
        Err(e) => e,
    };
    let second = reprompt(&first_err)?;
    Ok(match plan_from_reply(&second, categories, poi_map) {
        Ok((plan, repairs)) => PlanParseReport { plan: Some(plan), repairs, reprompted: true, rejected: None },
        Err(e) => PlanParseReport {
            plan: None,
            repairs: Vec::new(),
            reprompted: true,
            rejected: Some(format!("first reply: {first_err}; corrected reply: {e}")),
        },
    })
}

fn correction_note(error: &str) -> String {
    format!(
        "\n\n**Your previous reply could not be used:** {error}\n\
         Reply again with only the corrected JSON object."
    )
}

/// Extracts a structured plan from a narrative. Extraction runs at
/// temperature 0 regardless of `params`.
pub fn parse_plan(
    narrative: &Narrative,
    categories: &Vocabulary,
    poi_map: &ActivityPoiMap,
    templates: &TemplateSet,
    backend: &dyn TextBackend,
    params: &GenerationParams,
) -> Result<PlanParseReport, PlanError> {
    if narrative.text.trim().is_empty() {
        return Err(PlanError::EmptyNarrative);
    }
    let vars: BTreeMap<String, String> = bindings([
        ("activity_categories", categories.listing()),
        ("narrative", narrative.text.trim().to_string()),
        ("example_json", example_json(categories)),
    ]);
    let prompt = templates.render(template::PLAN_PARSE, &vars).map_err(crate::error::BackendError::from)?;
    let params = params.with_temperature(0.0);
    let first = backend.complete(&prompt, &params)?;
    validate_with_repair(
        first,
        |err| {
            let mut again = prompt.clone();
            again.user.push_str(&correction_note(err));
            Ok(backend.complete(&again, &params)?)
        },
        categories,
        poi_map,
    )
}

/// Plan straight from the profile, skipping the narrative stage.
pub fn direct_plan(
    profile: &PersonProfile,
    categories: &Vocabulary,
    poi_map: &ActivityPoiMap,
    templates: &TemplateSet,
    backend: &dyn TextBackend,
    params: &GenerationParams,
) -> Result<PlanParseReport, PlanError> {
    let vars = bindings([
        ("character_profile", profile.describe()),
        ("activity_categories", categories.listing()),
        ("example_json", example_json(categories)),
    ]);
    let prompt = templates.render(template::DIRECT_PLAN, &vars).map_err(crate::error::BackendError::from)?;
    let first = backend.complete(&prompt, params)?;
    validate_with_repair(
        first,
        |err| {
            let mut again = prompt.clone();
            again.user.push_str(&correction_note(err));
            Ok(backend.complete(&again, params)?)
        },
        categories,
        poi_map,
    )
}

/// Occupation-default day: sleep, work (or leisure), lunch, leisure, sleep.
pub fn fallback_plan(profile: &PersonProfile, categories: &Vocabulary, poi_map: &ActivityPoiMap) -> ActivityPlan {
    let day = [
        (SLEEP, "00:00", "Sleeping at home"),
        (if profile.is_working() { "work_study" } else { "leisure" }, "08:00", "Morning routine away from home"),
        ("eating", "12:00", "Lunch"),
        ("leisure", "18:00", "Evening free time"),
        (SLEEP, "22:00", "Going to bed"),
    ];
    let activities = day
        .iter()
        .filter_map(|(name, at, desc)| {
            let c = categories.lookup(name).cloned().unwrap_or_else(|| ActivityCategory::new(*name));
            (categories.contains(&c) || *name == SLEEP).then(|| PlannedActivity {
                location_category: poi_map.poi_category(&c),
                intention: c,
                start: TimeOfDay::parse(at).expect("static time"),
                description: desc.to_string(),
            })
        })
        .collect();
    ActivityPlan::new(activities).expect("fallback plan is well formed")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledActivity {
    pub activity: PlannedActivity,
    pub start: TimeOfDay,
    pub end: TimeOfDay,
}

impl ScheduledActivity {
    pub fn duration_minutes(&self) -> u32 {
        self.end.slots_since(self.start) * u32::from(SLOT_MINUTES)
    }
}

/// A plan with explicit `[start, end)` intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub items: Vec<ScheduledActivity>,
    /// Indices of zero-length intervals (equal consecutive starts).
    pub zero_length: Vec<usize>,
}

/// Each activity ends where the next one starts; the last ends at `day_end`.
pub fn plan_durations(plan: &ActivityPlan, day_end: TimeOfDay) -> Schedule {
    let acts = plan.activities();
    let items: Vec<ScheduledActivity> = acts
        .iter()
        .enumerate()
        .map(|(i, a)| ScheduledActivity {
            activity: a.clone(),
            start: a.start,
            end: acts.get(i + 1).map_or(day_end.max(a.start), |n| n.start),
        })
        .collect();
    let zero_length = items.iter().enumerate().filter(|(_, s)| s.start == s.end).map(|(i, _)| i).collect();
    Schedule { items, zero_length }
}
