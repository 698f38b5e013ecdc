use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::ActivityCategory;

pub const HOME: &str = "home";

const DEFAULT_MAP: &[(&str, &str)] = &[
    ("sleep", HOME),
    ("household", HOME),
    ("work_study", "office"),
    ("shopping", "shop"),
    ("eating", "restaurant"),
    ("leisure", "park"),
    ("social", "cafe"),
    ("errand", "service"),
    ("exercise", "sports"),
    ("other", "service"),
];

/// Activity category → POI category used for grounding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityPoiMap(BTreeMap<String, String>);

impl Default for ActivityPoiMap {
    fn default() -> Self {
        Self(DEFAULT_MAP.iter().map(|(a, p)| (a.to_string(), p.to_string())).collect())
    }
}

impl ActivityPoiMap {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Self(map)
    }

    /// POI category for an activity; unmapped activities use their own name.
    pub fn poi_category(&self, activity: &ActivityCategory) -> String {
        self.0.get(activity.as_str()).cloned().unwrap_or_else(|| activity.as_str().to_string())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(a, p)| (a.as_str(), p.as_str()))
    }
}
