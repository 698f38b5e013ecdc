//! Reading survey inputs: person profiles and ground-truth travel diaries.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ConfigError;
use crate::geo::{haversine_m, GeoPoint};
use crate::meo::OccupationCategory;
use crate::spatial::PoiDatabase;
use crate::time::{parse_clock_minutes, TimeOfDay};
use crate::types::{
    ActivityCategory, Education, Gender, IncomeBand, PersonProfile, Place, PlannedActivity, PoiId, Trajectory,
    TrajectoryRecord, TransportMode, Vocabulary,
};

/// Legs faster than this are treated as recording errors.
pub const MAX_PLAUSIBLE_SPEED_MPS: f64 = 40.0;

const PROFILE_COLUMNS: &[&str] =
    &["id", "age", "gender", "occupation", "income_band", "education", "owns_car", "owns_ebike", "home_poi"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectedRow {
    /// 1-based row or line number.
    pub row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ProfileIngest {
    pub profiles: Vec<PersonProfile>,
    pub rejected: Vec<RejectedRow>,
    /// (profile id, occupation text) pairs with no vocabulary match.
    pub unmapped: Vec<(String, String)>,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.trim().to_string(),
        other => other.to_string(),
    }
}

type Row = BTreeMap<String, String>;

/// Rows as column → text, whatever the file format.
fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Row>), ConfigError> {
    let text = read(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let objects: Vec<serde_json::Map<String, Value>> = match ext.as_str() {
        "json" => serde_json::from_str(&text).map_err(|e| ConfigError::parse(path, e))?,
        "jsonl" | "ndjson" => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()
            .map_err(|e| ConfigError::parse(path, e))?,
        _ => {
            let delimiter = if ext == "tsv" { b'\t' } else { b',' };
            let mut reader =
                csv::ReaderBuilder::new().delimiter(delimiter).trim(csv::Trim::All).from_reader(text.as_bytes());
            let headers: Vec<String> =
                reader.headers().map_err(|e| ConfigError::parse(path, e))?.iter().map(str::to_string).collect();
            let mut rows = Vec::new();
            for r in reader.records() {
                let r = r.map_err(|e| ConfigError::parse(path, e))?;
                rows.push(headers.iter().cloned().zip(r.iter().map(str::to_string)).collect());
            }
            return Ok((headers, rows));
        }
    };
    let mut columns = BTreeSet::new();
    let rows = objects
        .into_iter()
        .map(|o| {
            o.into_iter()
                .map(|(k, v)| {
                    columns.insert(k.clone());
                    (k, cell(&v))
                })
                .collect()
        })
        .collect();
    Ok((columns.into_iter().collect(), rows))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Some(true),
        "false" | "no" | "n" | "0" => Some(false),
        _ => None,
    }
}

fn profile_from_row(row: &BTreeMap<String, String>) -> Result<(PersonProfile, bool), String> {
    let get = |k: &str| row.get(k).map(String::as_str).filter(|v| !v.is_empty()).ok_or_else(|| format!("missing {k}"));
    let (occupation, mapped) = OccupationCategory::normalize(get("occupation")?);
    let profile = PersonProfile {
        id: get("id")?.to_string(),
        age: get("age")?.parse::<f64>().ok().filter(|a| (0.0..150.0).contains(a)).ok_or("bad age")? as u32,
        gender: Gender::parse_lenient(get("gender")?).ok_or("bad gender")?,
        occupation,
        income_band: IncomeBand::parse_lenient(get("income_band")?).ok_or("bad income_band")?,
        education: Education::parse_lenient(get("education")?).ok_or("bad education")?,
        owns_car: parse_bool(get("owns_car")?).ok_or("bad owns_car")?,
        owns_ebike: parse_bool(get("owns_ebike")?).ok_or("bad owns_ebike")?,
        home_poi: PoiId::new(get("home_poi")?),
        work_poi: get("work_poi").ok().map(PoiId::new),
    };
    Ok((profile, mapped))
}

/// Loads profiles from CSV, TSV, JSON or JSON lines.
///
/// Bad rows are reported, not fatal. A file with no rows, or one lacking a
/// required column, is an error.
pub fn ingest_profiles(path: &Path) -> Result<ProfileIngest, ConfigError> {
    let (columns, rows) = read_rows(path)?;
    if rows.is_empty() {
        return Err(ConfigError::parse(path, "no profile rows"));
    }
    let missing: Vec<_> = PROFILE_COLUMNS.iter().filter(|c| !columns.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        return Err(ConfigError::parse(path, format!("missing required columns {missing:?}")));
    }
    let mut out = ProfileIngest::default();
    let mut seen = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        let id = row.get("id").filter(|s| !s.is_empty()).cloned();
        match profile_from_row(row) {
            Ok(_) if id.as_ref().is_some_and(|id| seen.contains(id)) => {
                out.rejected.push(RejectedRow { row: i + 1, id, reason: "duplicate id".into() })
            }
            Ok((p, mapped)) => {
                if !mapped {
                    log::warn!("profile {}: occupation {:?} not in vocabulary", p.id, p.occupation.as_str());
                    out.unmapped.push((p.id.clone(), p.occupation.to_string()));
                }
                seen.insert(p.id.clone());
                out.profiles.push(p);
            }
            Err(reason) => out.rejected.push(RejectedRow { row: i + 1, id, reason }),
        }
    }
    Ok(out)
}

/// One row of a ground-truth diary as it appears on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiaryEntry {
    pub intention: String,
    pub start: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poi_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Arrival time when the diary records it separately.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrive: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDiary {
    pub agent_id: String,
    #[serde(default)]
    pub day: u32,
    pub entries: Vec<DiaryEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthEntry {
    pub intention: ActivityCategory,
    pub start: TimeOfDay,
    pub arrive: TimeOfDay,
    pub place: Place,
    pub mode: Option<TransportMode>,
}

/// A cleaned diary: times on the grid, categories from the vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthDiary {
    pub agent_id: String,
    pub day: u32,
    pub entries: Vec<GroundTruthEntry>,
}

impl GroundTruthDiary {
    pub fn to_trajectory(&self) -> Trajectory {
        let records = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let end = self.entries.get(i + 1).map_or(TimeOfDay::DAY_END, |n| n.start);
                TrajectoryRecord {
                    activity: PlannedActivity {
                        intention: e.intention.clone(),
                        start: e.start,
                        location_category: String::new(),
                        description: String::new(),
                    },
                    place: e.place.clone(),
                    mode: e.mode,
                    start: e.start,
                    arrive: e.arrive.min(end),
                    end,
                }
            })
            .collect();
        Trajectory { agent_id: self.agent_id.clone(), day: self.day, records }
    }

    /// On-disk form; ingesting it again gives the same diary.
    pub fn to_raw(&self) -> RawDiary {
        RawDiary {
            agent_id: self.agent_id.clone(),
            day: self.day,
            entries: self
                .entries
                .iter()
                .map(|e| DiaryEntry {
                    intention: e.intention.to_string(),
                    start: e.start.to_string(),
                    poi_id: Some(e.place.poi_id.to_string()),
                    lat: Some(e.place.point.lat),
                    lon: Some(e.place.point.lon),
                    mode: e.mode.map(|m| m.as_str().to_string()),
                    arrive: (e.arrive != e.start).then(|| e.arrive.to_string()),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Incomplete,
    Inconsistent,
    Outlier,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectedDiary {
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<String>,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub input: usize,
    pub accepted: usize,
    pub rejected: Vec<RejectedDiary>,
    /// Times moved onto the grid plus categories matched case-insensitively.
    pub repairs: usize,
}

impl IngestReport {
    pub fn count(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|r| r.reason == reason).count()
    }
}

type Rejection = (RejectReason, String);

fn grid_time(text: &str, repairs: &mut usize) -> Result<TimeOfDay, Rejection> {
    let minutes = parse_clock_minutes(text).map_err(|e| (RejectReason::Inconsistent, e.to_string()))?;
    if minutes >= 24 * 60 {
        return Err((RejectReason::Inconsistent, format!("time {text} is not within the day")));
    }
    let t = TimeOfDay::nearest(minutes);
    if t.minutes() != minutes {
        *repairs += 1;
    }
    Ok(t)
}

fn coords_id(p: GeoPoint) -> PoiId {
    PoiId::new(format!("@{:.5},{:.5}", p.lat, p.lon))
}

fn entry_place(e: &DiaryEntry, db: Option<&PoiDatabase>) -> Result<Place, Rejection> {
    let point = match (e.lat, e.lon) {
        (Some(lat), Some(lon)) => {
            Some(GeoPoint::new(lat, lon).map_err(|err| (RejectReason::Inconsistent, err.to_string()))?)
        }
        (None, None) => None,
        _ => return Err((RejectReason::Incomplete, "only one coordinate given".into())),
    };
    match (&e.poi_id, point) {
        (Some(id), Some(point)) => Ok(Place { poi_id: PoiId::new(id.clone()), point }),
        (Some(id), None) => {
            let poi = db
                .and_then(|db| db.get(&PoiId::new(id.clone())))
                .ok_or_else(|| (RejectReason::Incomplete, format!("poi {id} has no coordinates")))?;
            Ok(poi.place())
        }
        (None, Some(point)) => Ok(Place { poi_id: coords_id(point), point }),
        (None, None) => Err((RejectReason::Incomplete, "entry has no location".into())),
    }
}

fn clean_diary(
    raw: &RawDiary,
    vocab: &Vocabulary,
    db: Option<&PoiDatabase>,
    repairs: &mut usize,
) -> Result<GroundTruthDiary, Rejection> {
    use RejectReason::*;
    if raw.entries.is_empty() {
        return Err((Incomplete, "no entries".into()));
    }
    let mut entries: Vec<GroundTruthEntry> = Vec::with_capacity(raw.entries.len());
    for (i, e) in raw.entries.iter().enumerate() {
        let intention = vocab
            .lookup(&e.intention)
            .cloned()
            .ok_or_else(|| (Inconsistent, format!("unknown category {:?}", e.intention)))?;
        if intention.as_str() != e.intention {
            *repairs += 1;
        }
        let start = grid_time(&e.start, repairs)?;
        let arrive = match &e.arrive {
            Some(a) => grid_time(a, repairs)?,
            None => start,
        };
        let mode = match &e.mode {
            None => None,
            Some(m) if m.trim().is_empty() => None,
            Some(m) => Some(TransportMode::from_reply(m).ok_or_else(|| (Inconsistent, format!("unknown mode {m:?}")))?),
        };
        let place = entry_place(e, db)?;
        if let Some(prev) = entries.last() {
            if start < prev.start {
                return Err((Inconsistent, format!("entry {i} starts before its predecessor")));
            }
            let moved = place.poi_id != prev.place.poi_id;
            if moved && mode.is_none() {
                return Err((Incomplete, format!("entry {i} changes location without a mode")));
            }
            if !moved && mode.is_some() {
                return Err((Inconsistent, format!("entry {i} has a mode but no change of location")));
            }
        } else if start != TimeOfDay::MIDNIGHT || mode.is_some() {
            return Err((Incomplete, "day does not start at 00:00".into()));
        }
        if arrive < start {
            return Err((Inconsistent, format!("entry {i} arrives before it departs")));
        }
        entries.push(GroundTruthEntry { intention, start, arrive, place, mode });
    }
    for i in 1..entries.len() {
        let (prev, e) = (&entries[i - 1], &entries[i]);
        if e.mode.is_none() {
            continue;
        }
        let end = entries.get(i + 1).map_or(TimeOfDay::DAY_END, |n| n.start);
        let window = if e.arrive > e.start { e.arrive } else { end }.seconds_since(e.start);
        let distance = haversine_m(prev.place.point, e.place.point);
        let speed = if window > 0.0 { distance / window } else { f64::INFINITY };
        if speed > MAX_PLAUSIBLE_SPEED_MPS {
            return Err((Outlier, format!("entry {i}: {distance:.0} m in {window:.0} s ({speed:.1} m/s)")));
        }
    }
    Ok(GroundTruthDiary { agent_id: raw.agent_id.clone(), day: raw.day, entries })
}

/// Reads JSON-lines diaries. Only file errors are fatal; each bad line or
/// diary lands in the report.
pub fn ingest_diaries(
    path: &Path,
    vocab: &Vocabulary,
    db: Option<&PoiDatabase>,
) -> Result<(Vec<GroundTruthDiary>, IngestReport), ConfigError> {
    Ok(ingest_diary_text(&read(path)?, vocab, db))
}

pub fn ingest_diary_text(
    text: &str,
    vocab: &Vocabulary,
    db: Option<&PoiDatabase>,
) -> (Vec<GroundTruthDiary>, IngestReport) {
    let mut report = IngestReport::default();
    let mut diaries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.input += 1;
        let raw: RawDiary = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                let agent_id = serde_json::from_str::<Value>(line)
                    .ok()
                    .and_then(|v| v.get("agent_id")?.as_str().map(str::to_string));
                report.rejected.push(RejectedDiary {
                    line: n + 1,
                    agent_id,
                    reason: RejectReason::Incomplete,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        match clean_diary(&raw, vocab, db, &mut report.repairs) {
            Ok(d) => {
                report.accepted += 1;
                diaries.push(d);
            }
            Err((reason, detail)) => {
                log::info!("diary {} rejected: {detail}", raw.agent_id);
                report.rejected.push(RejectedDiary { line: n + 1, agent_id: Some(raw.agent_id), reason, detail });
            }
        }
    }
    (diaries, report)
}

/// JSON lines in the on-disk diary format.
pub fn diaries_to_jsonl(diaries: &[GroundTruthDiary]) -> String {
    diaries.iter().map(|d| serde_json::to_string(&d.to_raw()).expect("diary serializes") + "\n").collect()
}
