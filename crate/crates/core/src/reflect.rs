//! Meso level: at each completed activity node, maybe reconsider the next one.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backend::template::{self, bindings, TemplateSet};
use crate::backend::{extract_json_block, parse_relaxed, GenerationParams, TextBackend};
use crate::error::ConfigError;
use crate::meo::{MeoTable, OccupationCategory};
use crate::planner::ScheduledActivity;
use crate::rng::RngStream;
use crate::spatial::ActivityPoiMap;
use crate::time::{TimeOfDay, SLOT_MINUTES};
use crate::types::{ActivityCategory, AgentState, PersonProfile, Vocabulary};

pub const MIN_CHANGE_MINUTES: u32 = 15;
pub const MAX_CHANGE_MINUTES: u32 = 480;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Follow,
    Change,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RethinkDecision {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_activity: Option<ActivityCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_minutes: Option<u32>,
    pub reasoning: String,
    /// Why a reply was turned into `follow`, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coerced: Option<String>,
    /// The backend or the extraction failed outright.
    #[serde(default)]
    pub failed: bool,
}

impl RethinkDecision {
    pub fn follow(reasoning: impl Into<String>) -> Self {
        Self {
            action: Action::Follow,
            new_activity: None,
            duration_minutes: None,
            reasoning: reasoning.into(),
            coerced: None,
            failed: false,
        }
    }

    pub fn change(activity: ActivityCategory, minutes: u32, reasoning: impl Into<String>) -> Self {
        Self {
            action: Action::Change,
            new_activity: Some(activity),
            duration_minutes: Some(snap_duration(minutes)),
            reasoning: reasoning.into(),
            coerced: None,
            failed: false,
        }
    }

    fn coerced_follow(reasoning: impl Into<String>, why: &str, failed: bool) -> Self {
        Self { coerced: Some(why.to_string()), failed, ..Self::follow(reasoning) }
    }
}

/// Nearest 15-minute multiple, clamped to [15, 480].
pub fn snap_duration(minutes: u32) -> u32 {
    let step = u32::from(SLOT_MINUTES);
    let snapped = (minutes + step / 2) / step * step;
    snapped.clamp(MIN_CHANGE_MINUTES, MAX_CHANGE_MINUTES)
}

/// Load-time check that every occupation has a probability.
pub fn check_occupations<'a>(
    occupations: impl IntoIterator<Item = &'a OccupationCategory>,
    meo: &MeoTable,
) -> Result<(), ConfigError> {
    for occ in occupations {
        if !meo.contains(occ) {
            return Err(ConfigError::Invalid(format!("occupation {occ:?} has no MEO value")));
        }
    }
    Ok(())
}

/// One Bernoulli draw with the occupation's MEO probability.
///
/// Occupations are checked when the run is configured (see
/// [`check_occupations`]); an unknown one here never triggers.
pub fn should_rethink(occupation: &OccupationCategory, meo: &MeoTable, rng: &mut RngStream) -> bool {
    match meo.get(occupation) {
        Some(p) => rng.bernoulli(p),
        None => {
            log::error!("occupation {occupation} missing from MEO table");
            false
        }
    }
}

/// Text handed to the model as `{memory_context}`.
pub fn memory_context(state: &AgentState, next: &ScheduledActivity) -> String {
    let mut out = String::from("**Recent events (most recent first):**\n");
    let mut any = false;
    for e in state.memory() {
        any = true;
        let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        out.push_str(&format!("- {} [{}] {}\n", e.time, kind, e.summary));
    }
    if !any {
        out.push_str("- (nothing yet today)\n");
    }
    if let Some(last) = &state.last_activity {
        out.push_str(&format!("Just finished: {} ({})\n", last.intention, last.description));
    }
    out.push_str(&format!(
        "Next planned activity: {} from {} to {}{}",
        next.activity.intention,
        next.start,
        next.end,
        if next.activity.description.is_empty() { String::new() } else { format!(" ({})", next.activity.description) }
    ));
    out
}

fn minutes_field(v: Option<&Value>) -> Option<u32> {
    match v? {
        Value::Number(n) => n.as_f64().filter(|x| x.is_finite() && *x > 0.0).map(|x| x.round() as u32),
        Value::String(s) => s
            .trim()
            .trim_end_matches("minutes")
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| *x > 0.0)
            .map(|x| x.round() as u32),
        _ => None,
    }
}

/// Validate a raw model reply against the decision schema.
pub fn decision_from_reply(reply: &str, categories: &Vocabulary) -> RethinkDecision {
    let Some(value) = extract_json_block(reply).ok().and_then(parse_relaxed) else {
        return RethinkDecision::coerced_follow("", "extraction-failed", true);
    };
    let reasoning = value.get("reasoning").and_then(Value::as_str).unwrap_or_default().to_string();
    let action = value.get("action").and_then(Value::as_str).map(|s| s.trim().to_ascii_lowercase());
    match action.as_deref() {
        Some("follow") => RethinkDecision::follow(reasoning),
        Some("change") => {
            let Some(activity) = value.get("new_activity").and_then(Value::as_str).and_then(|n| categories.lookup(n))
            else {
                return RethinkDecision::coerced_follow(reasoning, "invalid-category", false);
            };
            let Some(minutes) = minutes_field(value.get("duration_minutes")) else {
                return RethinkDecision::coerced_follow(reasoning, "invalid-duration", false);
            };
            RethinkDecision::change(activity.clone(), minutes, reasoning)
        }
        _ => RethinkDecision::coerced_follow(reasoning, "invalid-action", false),
    }
}

/// Asks the backend whether to keep the next activity. Any failure means
/// `follow`.
#[allow(clippy::too_many_arguments)]
pub fn rethink(
    state: &AgentState,
    next: &ScheduledActivity,
    profile: &PersonProfile,
    categories: &Vocabulary,
    templates: &TemplateSet,
    backend: &dyn TextBackend,
    params: &GenerationParams,
) -> RethinkDecision {
    let vars = bindings([
        ("character_profile", profile.describe()),
        ("formatted_time", state.now.to_string()),
        ("memory_context", memory_context(state, next)),
        ("activity_categories", categories.listing()),
    ]);
    let prompt = match templates.render(template::RETHINK, &vars) {
        Ok(p) => p,
        Err(e) => return RethinkDecision::coerced_follow(e.to_string(), "template-error", true),
    };
    match backend.complete(&prompt, params) {
        Ok(reply) => decision_from_reply(&reply, categories),
        Err(e) => RethinkDecision::coerced_follow(e.to_string(), "backend-failure", true),
    }
}

/// Applies a decision to the node at `cursor`.
///
/// A change replaces the node's intention and sets its length. A longer node
/// pushes the following nodes later (durations kept, cascading); nodes that
/// would start at or after midnight are dropped and the last node is
/// truncated at the day end. A shorter node hands its slack to the next node.
pub fn apply_decision(
    items: &[ScheduledActivity],
    cursor: usize,
    decision: &RethinkDecision,
    poi_map: &ActivityPoiMap,
) -> Vec<ScheduledActivity> {
    let mut out = items.to_vec();
    let (Action::Change, Some(activity), Some(minutes)) =
        (decision.action, &decision.new_activity, decision.duration_minutes)
    else {
        return out;
    };
    let Some(node) = out.get_mut(cursor) else {
        return out;
    };
    node.activity.intention = activity.clone();
    node.activity.location_category = poi_map.poi_category(activity);
    if !decision.reasoning.is_empty() {
        node.activity.description = decision.reasoning.clone();
    }
    let new_end = node.start.saturating_add(minutes / u32::from(SLOT_MINUTES));
    node.end = new_end;

    if new_end.is_day_end() || cursor + 1 == out.len() {
        out.truncate(cursor + 1);
        out[cursor].end = TimeOfDay::DAY_END;
        return out;
    }
    if out[cursor + 1].start > new_end {
        out[cursor + 1].start = new_end;
    }
    for j in cursor + 1..out.len() {
        let prev_end = out[j - 1].end;
        if out[j].start < prev_end {
            let delta = prev_end.slots_since(out[j].start);
            out[j].start = prev_end;
            out[j].end = out[j].end.saturating_add(delta);
        }
    }
    if let Some(cut) = out.iter().position(|n| n.start.is_day_end()) {
        out.truncate(cut);
    }
    if let Some(last) = out.last_mut() {
        last.end = TimeOfDay::DAY_END;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionLogEntry {
    pub agent_id: String,
    pub day: u32,
    pub time: TimeOfDay,
    pub node: usize,
    pub planned: ActivityCategory,
    #[serde(flatten)]
    pub decision: RethinkDecision,
}
