//! Domain types shared across the pipeline.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::geo::GeoPoint;
use crate::meo::OccupationCategory;
use crate::time::TimeOfDay;

pub const DEFAULT_CATEGORIES: &[&str] =
    &["sleep", "work_study", "shopping", "eating", "leisure", "household", "social", "errand", "exercise", "other"];

pub const SLEEP: &str = "sleep";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoiId(pub String);

impl PoiId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PoiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityCategory(String);

impl ActivityCategory {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_sleep(&self) -> bool {
        self.0 == SLEEP
    }
}

impl fmt::Display for ActivityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Closed set of activity categories for one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vocabulary(Vec<ActivityCategory>);

impl Default for Vocabulary {
    fn default() -> Self {
        Self(DEFAULT_CATEGORIES.iter().map(|c| ActivityCategory::new(*c)).collect())
    }
}

impl Vocabulary {
    pub fn new(names: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let mut out: Vec<ActivityCategory> = Vec::new();
        for n in names {
            let c = ActivityCategory::new(n);
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Self(out)
    }

    /// Case-insensitive exact lookup.
    pub fn lookup(&self, name: &str) -> Option<&ActivityCategory> {
        let name = name.trim();
        self.0.iter().find(|c| c.as_str().eq_ignore_ascii_case(name))
    }

    pub fn contains(&self, c: &ActivityCategory) -> bool {
        self.0.contains(c)
    }

    pub fn index_of(&self, c: &ActivityCategory) -> Option<usize> {
        self.0.iter().position(|x| x == c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActivityCategory> {
        self.0.iter()
    }

    pub fn get(&self, i: usize) -> Option<&ActivityCategory> {
        self.0.get(i)
    }

    /// Comma-separated listing used in prompts.
    pub fn listing(&self) -> String {
        self.0.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncomeBand {
    Low,
    Middle,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Education {
    Primary,
    Secondary,
    Tertiary,
    Postgraduate,
}

macro_rules! lenient_enum_parse {
    ($ty:ty { $($variant:ident => [$($alias:literal),+]),+ $(,)? }) => {
        impl $ty {
            pub fn parse_lenient(s: &str) -> Option<Self> {
                let k = s.trim().to_ascii_lowercase();
                $(if [$($alias),+].contains(&k.as_str()) { return Some(Self::$variant); })+
                None
            }
        }
    };
}

lenient_enum_parse!(Gender { Female => ["female", "f", "woman"], Male => ["male", "m", "man"], Other => ["other", "x", "nonbinary", "non-binary"] });
lenient_enum_parse!(IncomeBand { Low => ["low"], Middle => ["middle", "medium", "mid"], High => ["high"] });
lenient_enum_parse!(Education {
    Primary => ["primary", "elementary", "none"],
    Secondary => ["secondary", "high school", "highschool", "vocational"],
    Tertiary => ["tertiary", "bachelor", "college", "university", "undergraduate"],
    Postgraduate => ["postgraduate", "master", "masters", "phd", "doctorate", "graduate"],
});

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonProfile {
    pub id: String,
    pub age: u32,
    pub gender: Gender,
    pub occupation: OccupationCategory,
    pub income_band: IncomeBand,
    pub education: Education,
    pub owns_car: bool,
    pub owns_ebike: bool,
    pub home_poi: PoiId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_poi: Option<PoiId>,
}

impl PersonProfile {
    pub fn is_working(&self) -> bool {
        self.work_poi.is_some() && !self.occupation.is_non_working()
    }

    /// Text rendering embedded in every prompt.
    pub fn describe(&self) -> String {
        let gender = match self.gender {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Other => "other",
        };
        let income = match self.income_band {
            IncomeBand::Low => "low",
            IncomeBand::Middle => "middle",
            IncomeBand::High => "high",
        };
        let education = match self.education {
            Education::Primary => "primary school",
            Education::Secondary => "secondary school",
            Education::Tertiary => "university degree",
            Education::Postgraduate => "postgraduate degree",
        };
        let car = if self.owns_car { "You own a car." } else { "You do not own a car." };
        let ebike = if self.owns_ebike { "You own an e-bike." } else { "You do not own an e-bike." };
        let work = if self.is_working() {
            "Employed, with a regular workplace to commute to."
        } else if self.occupation.as_str() == "Retired" {
            "Retired, no regular workplace."
        } else {
            "Not currently working, no regular workplace."
        };
        format!(
            "**Character Profile:**\n- Age: {}\n- Gender: {gender}\n- Occupation: {}\n- Income level: {income}\n- Education: {education}\n- Car ownership: {car}\n- E-bike ownership: {ebike}\n- Work status: {work}",
            self.age, self.occupation
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedActivity {
    pub intention: ActivityCategory,
    pub start: TimeOfDay,
    /// Semantic location tag the activity should be grounded to.
    pub location_category: String,
    #[serde(default)]
    pub description: String,
}

/// Ordered daily plan. Construction guarantees a leading sleep at 00:00 and
/// non-decreasing starts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivityPlan {
    activities: Vec<PlannedActivity>,
}

impl ActivityPlan {
    pub fn new(activities: Vec<PlannedActivity>) -> Result<Self, PlanError> {
        let first = activities.first().ok_or(PlanError::EmptyPlan)?;
        if !first.intention.is_sleep() || first.start != TimeOfDay::MIDNIGHT {
            return Err(PlanError::MissingLeadingSleep);
        }
        if let Some(i) = activities.windows(2).position(|w| w[1].start < w[0].start) {
            return Err(PlanError::Unsorted(i + 1));
        }
        if let Some(a) = activities.iter().find(|a| a.start.is_day_end()) {
            return Err(PlanError::Unsorted(activities.iter().position(|x| x == a).unwrap_or(0)));
        }
        Ok(Self { activities })
    }

    pub fn activities(&self) -> &[PlannedActivity] {
        &self.activities
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn into_inner(self) -> Vec<PlannedActivity> {
        self.activities
    }
}

impl<'de> Deserialize<'de> for ActivityPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            activities: Vec<PlannedActivity>,
        }
        let raw = Raw::deserialize(d)?;
        Self::new(raw.activities).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    Walk,
    Bike,
    Ebike,
    Car,
    Bus,
    Subway,
}

impl TransportMode {
    pub const ALL: [TransportMode; 6] = [Self::Walk, Self::Bike, Self::Ebike, Self::Car, Self::Bus, Self::Subway];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Walk => "walk",
            Self::Bike => "bike",
            Self::Ebike => "ebike",
            Self::Car => "car",
            Self::Bus => "bus",
            Self::Subway => "subway",
        }
    }

    /// Name offered to the model in the mode-choice prompt.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::Walk => "Walking",
            Self::Bike => "Cycling",
            Self::Ebike => "E-bike",
            Self::Car => "Driving",
            Self::Bus => "Bus",
            Self::Subway => "Subway",
        }
    }

    /// Accepts canonical names, display names and common synonyms.
    pub fn from_reply(text: &str) -> Option<Self> {
        let k = text.trim().trim_matches(|c: char| c == '.' || c == '"' || c == '\'').to_ascii_lowercase();
        let k = k.replace(['-', '_'], " ");
        let mode = match k.as_str() {
            "walk" | "walking" | "on foot" | "by foot" => Self::Walk,
            "bike" | "cycling" | "bicycle" | "cycle" | "biking" | "shared bike" => Self::Bike,
            "ebike" | "e bike" | "e biking" | "electric bike" | "electric bicycle" | "scooter" => Self::Ebike,
            "car" | "driving" | "drive" | "taxi" | "by car" => Self::Car,
            "bus" | "taking the bus" | "by bus" => Self::Bus,
            "subway" | "metro" | "taking the subway" | "by subway" | "underground" => Self::Subway,
            _ => return None,
        };
        Some(mode)
    }

    /// Modes usable given vehicle ownership. Walking, cycling and transit are
    /// always available.
    pub fn permitted(owns_car: bool, owns_ebike: bool) -> Vec<Self> {
        Self::ALL
            .into_iter()
            .filter(|m| match m {
                Self::Car => owns_car,
                Self::Ebike => owns_ebike,
                _ => true,
            })
            .collect()
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Executed,
    Rethought,
    RethoughtFailed,
    Traveled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryEvent {
    pub time: TimeOfDay,
    pub kind: MemoryKind,
    pub summary: String,
}

pub const DEFAULT_MEMORY_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub now: TimeOfDay,
    pub current_location: PoiId,
    memory: VecDeque<MemoryEvent>,
    memory_cap: usize,
    pub plan_cursor: usize,
    pub last_activity: Option<PlannedActivity>,
}

impl AgentState {
    pub fn new(home: PoiId, memory_cap: usize) -> Self {
        Self {
            now: TimeOfDay::MIDNIGHT,
            current_location: home,
            memory: VecDeque::new(),
            memory_cap,
            plan_cursor: 0,
            last_activity: None,
        }
    }

    /// Push an event to the front; the oldest event is evicted past the cap.
    pub fn remember(&mut self, event: MemoryEvent) {
        if self.memory_cap == 0 {
            return;
        }
        self.memory.push_front(event);
        self.memory.truncate(self.memory_cap);
    }

    /// Most recent first.
    pub fn memory(&self) -> impl Iterator<Item = &MemoryEvent> {
        self.memory.iter()
    }

    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }
}

/// Where a record happened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub poi_id: PoiId,
    pub point: GeoPoint,
}

/// One executed activity. Travel, when present, occupies `[start, arrive)`
/// and the activity itself `[arrive, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub activity: PlannedActivity,
    pub place: Place,
    pub mode: Option<TransportMode>,
    pub start: TimeOfDay,
    pub arrive: TimeOfDay,
    pub end: TimeOfDay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub agent_id: String,
    pub day: u32,
    pub records: Vec<TrajectoryRecord>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TrajectoryViolation {
    #[error("trajectory has no records")]
    Empty,
    #[error("first record starts at {0}, not 00:00")]
    LateStart(TimeOfDay),
    #[error("record {0} has inconsistent times")]
    BadInterval(usize),
    #[error("record {0} overlaps its predecessor")]
    Overlap(usize),
    #[error("gap before record {0}")]
    Gap(usize),
    #[error("last record ends at {0}, not 24:00")]
    EarlyEnd(TimeOfDay),
    #[error("record {0} has a mode but no change of location")]
    ModeWithoutMove(usize),
    #[error("record {0} changes location without a mode")]
    MoveWithoutMode(usize),
}

impl Trajectory {
    /// Checks the tiling and mode/movement invariants.
    pub fn validate(&self) -> Result<(), TrajectoryViolation> {
        let first = self.records.first().ok_or(TrajectoryViolation::Empty)?;
        if first.start != TimeOfDay::MIDNIGHT {
            return Err(TrajectoryViolation::LateStart(first.start));
        }
        if first.mode.is_some() {
            return Err(TrajectoryViolation::ModeWithoutMove(0));
        }
        for (i, r) in self.records.iter().enumerate() {
            if !(r.start <= r.arrive && r.arrive <= r.end) || (r.mode.is_none() && r.arrive != r.start) {
                return Err(TrajectoryViolation::BadInterval(i));
            }
            if i == 0 {
                continue;
            }
            let prev = &self.records[i - 1];
            if r.start < prev.end {
                return Err(TrajectoryViolation::Overlap(i));
            }
            if r.start > prev.end {
                return Err(TrajectoryViolation::Gap(i));
            }
            let moved = r.place.poi_id != prev.place.poi_id;
            match (moved, r.mode.is_some()) {
                (false, true) => return Err(TrajectoryViolation::ModeWithoutMove(i)),
                (true, false) => return Err(TrajectoryViolation::MoveWithoutMode(i)),
                _ => {}
            }
        }
        let last = self.records.last().expect("non-empty");
        if !last.end.is_day_end() {
            return Err(TrajectoryViolation::EarlyEnd(last.end));
        }
        Ok(())
    }

    /// Records where a trip happened.
    pub fn trips(&self) -> impl Iterator<Item = (&TrajectoryRecord, &TrajectoryRecord)> {
        self.records.windows(2).filter(|w| w[1].mode.is_some()).map(|w| (&w[0], &w[1]))
    }
}

/// Flat JSON shape of a record.
#[derive(Serialize, Deserialize)]
struct RecordWire {
    intention: ActivityCategory,
    poi_id: PoiId,
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<TransportMode>,
    start: TimeOfDay,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arrive: Option<TimeOfDay>,
    end: TimeOfDay,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    location_category: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryWire {
    agent_id: String,
    day: u32,
    records: Vec<RecordWire>,
}

impl Serialize for Trajectory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = TrajectoryWire {
            agent_id: self.agent_id.clone(),
            day: self.day,
            records: self
                .records
                .iter()
                .map(|r| RecordWire {
                    intention: r.activity.intention.clone(),
                    poi_id: r.place.poi_id.clone(),
                    lat: r.place.point.lat,
                    lon: r.place.point.lon,
                    mode: r.mode,
                    start: r.start,
                    arrive: r.mode.map(|_| r.arrive),
                    end: r.end,
                    location_category: r.activity.location_category.clone(),
                    description: r.activity.description.clone(),
                })
                .collect(),
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Trajectory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = TrajectoryWire::deserialize(d)?;
        let records = wire
            .records
            .into_iter()
            .map(|w| TrajectoryRecord {
                activity: PlannedActivity {
                    intention: w.intention,
                    start: w.start,
                    location_category: w.location_category,
                    description: w.description,
                },
                place: Place { poi_id: w.poi_id, point: GeoPoint { lat: w.lat, lon: w.lon } },
                mode: w.mode,
                start: w.start,
                arrive: w.arrive.unwrap_or(w.start),
                end: w.end,
            })
            .collect();
        Ok(Trajectory { agent_id: wire.agent_id, day: wire.day, records })
    }
}
