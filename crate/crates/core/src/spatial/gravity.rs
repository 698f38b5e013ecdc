//! Gravity-model destination choice.

use serde::{Deserialize, Serialize};

use super::poi::{Poi, PoiDatabase};
use crate::error::SpatialError;
use crate::geo::GeoPoint;
use crate::rng::RngStream;

/// Distances below this are raised to it before weighting.
pub const MIN_DISTANCE_M: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GravityParams {
    /// Attractiveness exponent.
    pub alpha: f64,
    /// Distance exponent; negative values make distance a deterrent.
    pub beta: f64,
    pub candidate_cap: usize,
    pub search_radius_m: f64,
}

impl Default for GravityParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: -1.5, candidate_cap: 50, search_radius_m: 5000.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<'a> {
    pub poi: &'a Poi,
    pub distance_m: f64,
}

/// POIs of `category` near `origin`, nearest first, at most `candidate_cap`.
/// The search radius doubles until something is found or the whole category
/// is covered.
pub fn candidate_pois<'a>(
    db: &'a PoiDatabase,
    category: &str,
    origin: GeoPoint,
    params: &GravityParams,
) -> Result<Vec<Candidate<'a>>, SpatialError> {
    let farthest = db.farthest(category, origin).ok_or_else(|| SpatialError::EmptyCategory(category.to_string()))?;
    let mut radius = params.search_radius_m.max(1.0);
    let mut found = db.within(category, origin, radius);
    while found.is_empty() && radius < farthest {
        radius *= 2.0;
        found = db.within(category, origin, radius);
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.id.cmp(&b.0.id)));
    found.truncate(params.candidate_cap.max(1));
    Ok(found.into_iter().map(|(poi, d)| Candidate { poi, distance_m: d.max(MIN_DISTANCE_M) }).collect())
}

/// Selection probability for each candidate, proportional to
/// `distance^beta * attractiveness^alpha`, computed in log space.
pub fn gravity_probabilities(candidates: &[Candidate<'_>], params: &GravityParams) -> Result<Vec<f64>, SpatialError> {
    if candidates.is_empty() {
        return Err(SpatialError::NoCandidates);
    }
    let logw: Vec<f64> = candidates
        .iter()
        .map(|c| {
            let lw = params.beta * c.distance_m.ln() + params.alpha * c.poi.attractiveness.ln();
            if lw.is_nan() || lw == f64::INFINITY || c.distance_m <= 0.0 || c.poi.attractiveness <= 0.0 {
                Err(SpatialError::NonFinite(c.poi.id.to_string()))
            } else {
                Ok(lw)
            }
        })
        .collect::<Result<_, _>>()?;
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(SpatialError::NonFinite(candidates[0].poi.id.to_string()));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Categorical draw over `candidates` with the given probabilities.
pub fn sample_destination<'a>(probabilities: &[f64], candidates: &[Candidate<'a>], rng: &mut RngStream) -> &'a Poi {
    sample_index(probabilities, rng).map_or(candidates[0].poi, |i| candidates[i].poi)
}

/// Inverse-CDF draw; `None` only for an empty vector.
pub fn sample_index(probabilities: &[f64], rng: &mut RngStream) -> Option<usize> {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(i);
        }
    }
    probabilities.iter().rposition(|p| *p > 0.0).or(probabilities.len().checked_sub(1))
}
