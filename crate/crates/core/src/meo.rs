//! Occupation categories and their rethinking probabilities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Default occupation bands and their plan-deviation probability.
pub const DEFAULT_BANDS: &[(f64, &[&str])] = &[
    (0.30, &["Factory Worker", "Clerical Staff", "Delivery Worker", "Technician", "Low-income Worker"]),
    (0.50, &["University Lecturer", "Civil Servant", "Engineer", "Office Worker", "Student"]),
    (0.70, &["Small Shopkeeper", "Business Owner", "Manager", "Senior Manager", "Corporate Staff"]),
    (0.20, &["Unemployed", "Retired"]),
];

/// Probability assigned to occupations outside the default vocabulary.
pub const UNMAPPED_MEO: f64 = 0.50;

const SYNONYMS: &[(&str, &str)] = &[
    ("factory", "Factory Worker"),
    ("factory worker", "Factory Worker"),
    ("worker", "Factory Worker"),
    ("clerk", "Clerical Staff"),
    ("clerical", "Clerical Staff"),
    ("courier", "Delivery Worker"),
    ("delivery", "Delivery Worker"),
    ("delivery driver", "Delivery Worker"),
    ("technician", "Technician"),
    ("low income worker", "Low-income Worker"),
    ("lecturer", "University Lecturer"),
    ("professor", "University Lecturer"),
    ("teacher", "University Lecturer"),
    ("civil servant", "Civil Servant"),
    ("government employee", "Civil Servant"),
    ("engineer", "Engineer"),
    ("programmer", "Engineer"),
    ("software engineer", "Engineer"),
    ("office worker", "Office Worker"),
    ("white collar", "Office Worker"),
    ("student", "Student"),
    ("university student", "Student"),
    ("shopkeeper", "Small Shopkeeper"),
    ("shop owner", "Small Shopkeeper"),
    ("business owner", "Business Owner"),
    ("entrepreneur", "Business Owner"),
    ("freelancer", "Business Owner"),
    ("manager", "Manager"),
    ("senior manager", "Senior Manager"),
    ("executive", "Senior Manager"),
    ("corporate staff", "Corporate Staff"),
    ("unemployed", "Unemployed"),
    ("jobless", "Unemployed"),
    ("job seeker", "Unemployed"),
    ("retired", "Retired"),
    ("retiree", "Retired"),
    ("pensioner", "Retired"),
];

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupationCategory(String);

impl OccupationCategory {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Map free text onto the default vocabulary. Returns the category and
    /// whether a mapping was found; unmapped text is kept as-is (trimmed).
    pub fn normalize(raw: &str) -> (Self, bool) {
        let key = normalize_key(raw);
        for (_, names) in DEFAULT_BANDS {
            if let Some(name) = names.iter().find(|n| normalize_key(n) == key) {
                return (Self::new(*name), true);
            }
        }
        if let Some((_, name)) = SYNONYMS.iter().find(|(s, _)| *s == key) {
            return (Self::new(*name), true);
        }
        (Self::new(raw.trim()), false)
    }

    /// Occupations that imply no regular workplace.
    pub fn is_non_working(&self) -> bool {
        matches!(self.0.as_str(), "Unemployed" | "Retired")
    }
}

fn normalize_key(s: &str) -> String {
    s.trim().to_lowercase().replace(['_', '-'], " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

impl fmt::Display for OccupationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeoTable(BTreeMap<OccupationCategory, f64>);

impl Default for MeoTable {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        for (meo, names) in DEFAULT_BANDS {
            for name in *names {
                map.insert(OccupationCategory::new(*name), *meo);
            }
        }
        Self(map)
    }
}

impl MeoTable {
    pub fn from_entries(entries: impl IntoIterator<Item = (OccupationCategory, f64)>) -> Result<Self, ConfigError> {
        let mut table = Self(BTreeMap::new());
        for (occ, p) in entries {
            table.insert(occ, p)?;
        }
        Ok(table)
    }

    /// Every occupation gets the same probability. `0.0` is the no-rethinking
    /// configuration.
    pub fn uniform(p: f64) -> Self {
        let mut t = Self::default();
        for v in t.0.values_mut() {
            *v = p;
        }
        t
    }

    pub fn insert(&mut self, occupation: OccupationCategory, meo: f64) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&meo) {
            return Err(ConfigError::Invalid(format!("MEO for {occupation} must lie in [0, 1], got {meo}")));
        }
        self.0.insert(occupation, meo);
        Ok(())
    }

    pub fn get(&self, occupation: &OccupationCategory) -> Option<f64> {
        self.0.get(occupation).copied()
    }

    pub fn contains(&self, occupation: &OccupationCategory) -> bool {
        self.0.contains_key(occupation)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationCategory, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.0.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            Some((k, v)) => Err(ConfigError::Invalid(format!("MEO for {k} must lie in [0, 1], got {v}"))),
            None => Ok(()),
        }
    }
}
