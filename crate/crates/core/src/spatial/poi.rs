use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SpatialError};
use crate::geo::{haversine_m, GeoPoint};
use crate::types::{Place, PoiId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub id: PoiId,
    pub name: String,
    pub category: String,
    pub location: GeoPoint,
    pub attractiveness: f64,
}

impl Poi {
    pub fn place(&self) -> Place {
        Place { poi_id: self.id.clone(), point: self.location }
    }
}

/// Flat record shape shared by the CSV and JSON loaders.
#[derive(Debug, Deserialize, Serialize)]
pub struct PoiRecord {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub category: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub attractiveness: Option<f64>,
}

impl TryFrom<PoiRecord> for Poi {
    type Error = SpatialError;

    fn try_from(r: PoiRecord) -> Result<Self, Self::Error> {
        let location = GeoPoint::new(r.lat, r.lon).map_err(|e| SpatialError::InvalidPoi(format!("{}: {e}", r.id)))?;
        let attractiveness = r.attractiveness.unwrap_or(1.0);
        if !(attractiveness.is_finite() && attractiveness > 0.0) {
            return Err(SpatialError::InvalidPoi(format!(
                "{}: attractiveness must be positive, got {attractiveness}",
                r.id
            )));
        }
        if r.id.trim().is_empty() || r.category.trim().is_empty() {
            return Err(SpatialError::InvalidPoi("id and category must be non-empty".into()));
        }
        let name = if r.name.is_empty() { r.id.clone() } else { r.name };
        Ok(Poi { id: PoiId::new(r.id), name, category: r.category.trim().to_string(), location, attractiveness })
    }
}

/// Grid cell edge in degrees (about 1.1 km of latitude).
const CELL_DEG: f64 = 0.01;

type Cell = (i32, i32);

fn cell_of(p: GeoPoint) -> Cell {
    ((p.lat / CELL_DEG).floor() as i32, (p.lon / CELL_DEG).floor() as i32)
}

#[derive(Clone, Debug, Default)]
struct CategoryIndex {
    members: Vec<usize>,
    cells: HashMap<Cell, Vec<usize>>,
}

/// Read-only POI collection with id, category and grid indexes.
#[derive(Clone, Debug, Default)]
pub struct PoiDatabase {
    pois: Vec<Poi>,
    by_id: HashMap<PoiId, usize>,
    by_category: BTreeMap<String, CategoryIndex>,
}

impl PoiDatabase {
    pub fn new(pois: Vec<Poi>) -> Result<Self, SpatialError> {
        let mut db = Self::default();
        for (i, poi) in pois.iter().enumerate() {
            if db.by_id.insert(poi.id.clone(), i).is_some() {
                return Err(SpatialError::InvalidPoi(format!("duplicate id {}", poi.id)));
            }
            let idx = db.by_category.entry(poi.category.clone()).or_default();
            idx.members.push(i);
            idx.cells.entry(cell_of(poi.location)).or_default().push(i);
        }
        db.pois = pois;
        Ok(db)
    }

    /// Loads `.json` (array), `.jsonl` or delimited text with a header row
    /// `id,name,category,lat,lon[,attractiveness]`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let records: Vec<PoiRecord> = match ext.as_str() {
            "json" => serde_json::from_str(&text).map_err(|e| ConfigError::parse(path, e))?,
            "jsonl" | "ndjson" => text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<_, _>>()
                .map_err(|e| ConfigError::parse(path, e))?,
            _ => {
                let delimiter = if ext == "tsv" { b'\t' } else { b',' };
                csv::ReaderBuilder::new()
                    .delimiter(delimiter)
                    .trim(csv::Trim::All)
                    .from_reader(text.as_bytes())
                    .deserialize()
                    .collect::<Result<_, _>>()
                    .map_err(|e| ConfigError::parse(path, e))?
            }
        };
        let pois = records
            .into_iter()
            .map(Poi::try_from)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ConfigError::parse(path, e))?;
        Self::new(pois).map_err(|e| ConfigError::parse(path, e))
    }

    pub fn get(&self, id: &PoiId) -> Option<&Poi> {
        self.by_id.get(id).map(|&i| &self.pois[i])
    }

    pub fn resolve(&self, id: &PoiId) -> Result<&Poi, SpatialError> {
        self.get(id).ok_or_else(|| SpatialError::UnknownPoi(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.pois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pois.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Poi> {
        self.pois.iter()
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.by_category.keys().map(String::as_str)
    }

    pub fn has_category(&self, category: &str) -> bool {
        self.by_category.get(category).is_some_and(|c| !c.members.is_empty())
    }

    pub fn in_category(&self, category: &str) -> impl Iterator<Item = &Poi> {
        self.by_category.get(category).into_iter().flat_map(|c| c.members.iter().map(|&i| &self.pois[i]))
    }

    /// POIs of `category` within `radius_m` of `origin`, with distances.
    pub fn within(&self, category: &str, origin: GeoPoint, radius_m: f64) -> Vec<(&Poi, f64)> {
        let Some(idx) = self.by_category.get(category) else {
            return Vec::new();
        };
        let dlat = (radius_m / crate::geo::EARTH_RADIUS_M).to_degrees();
        let coslat = origin.lat.to_radians().cos().abs().max(1e-6);
        let dlon = (dlat / coslat).min(360.0);
        let (lo, hi) = (
            cell_of(GeoPoint { lat: origin.lat - dlat, lon: origin.lon - dlon }),
            cell_of(GeoPoint { lat: origin.lat + dlat, lon: origin.lon + dlon }),
        );
        let span = (i64::from(hi.0 - lo.0) + 1) * (i64::from(hi.1 - lo.1) + 1);
        let scan: Box<dyn Iterator<Item = usize>> = if span as usize > idx.cells.len() {
            Box::new(idx.members.iter().copied())
        } else {
            Box::new(
                (lo.0..=hi.0)
                    .flat_map(move |a| (lo.1..=hi.1).map(move |b| (a, b)))
                    .filter_map(|c| idx.cells.get(&c))
                    .flatten()
                    .copied(),
            )
        };
        scan.filter_map(|i| {
            let d = haversine_m(origin, self.pois[i].location);
            (d <= radius_m).then_some((&self.pois[i], d))
        })
        .collect()
    }

    /// Largest distance from `origin` to any POI of `category`.
    pub fn farthest(&self, category: &str, origin: GeoPoint) -> Option<f64> {
        self.in_category(category).map(|p| haversine_m(origin, p.location)).reduce(f64::max)
    }
}
