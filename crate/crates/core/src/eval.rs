//! Fidelity metrics: Jensen-Shannon divergence over four population
//! distributions, and the combined score.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::geo::{project_local, GeoPoint};
use crate::time::SLOTS_PER_DAY;
use crate::types::{Trajectory, TransportMode, Vocabulary};

/// Added to every count before normalizing.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Highest daily location count with its own bin; larger counts share one.
pub const LOCATION_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    /// Checks that `probabilities` are non-negative and sum to one.
    pub fn new(labels: Vec<String>, probabilities: Vec<f64>) -> Result<Self, MetricError> {
        if labels.len() != probabilities.len() || labels.is_empty() {
            return Err(MetricError::InvalidDistribution(format!(
                "{} labels for {} values",
                labels.len(),
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(MetricError::InvalidDistribution("negative or non-finite probability".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricError::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { labels, probabilities })
    }

    /// `(count + epsilon) / total`. All-zero counts give the uniform
    /// distribution.
    pub fn from_counts(labels: Vec<String>, counts: &[f64], epsilon: f64) -> Self {
        assert_eq!(labels.len(), counts.len(), "one count per label");
        let smoothed: Vec<f64> = counts.iter().map(|c| c + epsilon).collect();
        let total: f64 = smoothed.iter().sum();
        let probabilities = if total > 0.0 {
            smoothed.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / counts.len() as f64; counts.len()]
        };
        Self { labels, probabilities }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probabilities[i])
    }
}

fn kl_term(a: f64, m: f64) -> f64 {
    if a > 0.0 {
        a * (a / m).log2()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence with base-2 logarithms, so the result lies in
/// [0, 1]. Both distributions must share their labels.
pub fn jsd(p: &Distribution, q: &Distribution) -> Result<f64, MetricError> {
    if p.labels != q.labels {
        return Err(MetricError::SupportMismatch);
    }
    let mut total = 0.0;
    for (&a, &b) in p.probabilities.iter().zip(&q.probabilities) {
        let m = 0.5 * (a + b);
        total += 0.5 * kl_term(a, m) + 0.5 * kl_term(b, m);
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Mean of `1 - jsd` over the four metrics.
pub fn final_score(jsd_intention: f64, jsd_locations: f64, jsd_mode: f64, jsd_radius: f64) -> Result<f64, MetricError> {
    let values =
        [("intention", jsd_intention), ("locations", jsd_locations), ("mode", jsd_mode), ("radius", jsd_radius)];
    for (name, value) in values {
        if !(0.0..=1.0).contains(&value) {
            return Err(MetricError::OutOfRange { name: name.to_string(), value });
        }
    }
    Ok(values.iter().map(|(_, v)| 1.0 - v).sum::<f64>() / 4.0)
}

/// Root mean squared distance of the record locations from their centroid,
/// one point per record, in meters.
pub fn radius_of_gyration(trajectory: &Trajectory) -> f64 {
    let points: Vec<GeoPoint> = trajectory.records.iter().map(|r| r.place.point).collect();
    if points.is_empty() {
        return 0.0;
    }
    let n = points.len() as f64;
    let origin = GeoPoint {
        lat: points.iter().map(|p| p.lat).sum::<f64>() / n,
        lon: points.iter().map(|p| p.lon).sum::<f64>() / n,
    };
    let xy: Vec<(f64, f64)> = points.iter().map(|p| project_local(origin, *p)).collect();
    let cx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = xy.iter().map(|p| p.1).sum::<f64>() / n;
    (xy.iter().map(|(x, y)| (x - cx).powi(2) + (y - cy).powi(2)).sum::<f64>() / n).sqrt()
}

/// Distinct POIs in the day.
pub fn daily_unique_locations(trajectory: &Trajectory) -> usize {
    trajectory.records.iter().map(|r| &r.place.poi_id).collect::<BTreeSet<_>>().len()
}

/// Unique-location counts in bins 1..=20, then "21+".
pub fn locations_distribution(trajectories: &[Trajectory], epsilon: f64) -> Distribution {
    let mut labels: Vec<String> = (1..=LOCATION_BINS).map(|k| k.to_string()).collect();
    labels.push(format!("{}+", LOCATION_BINS + 1));
    let mut counts = vec![0.0; LOCATION_BINS + 1];
    for t in trajectories {
        let k = daily_unique_locations(t).clamp(1, LOCATION_BINS + 1);
        counts[k - 1] += 1.0;
    }
    Distribution::from_counts(labels, &counts, epsilon)
}

/// Trip modes in the fixed order walk, bike, ebike, car, bus, subway.
pub fn mode_distribution(trajectories: &[Trajectory], epsilon: f64) -> Distribution {
    let mut counts = [0.0; 6];
    for t in trajectories {
        for r in &t.records {
            if let Some(m) = r.mode {
                counts[TransportMode::ALL.iter().position(|x| *x == m).expect("mode listed")] += 1.0;
            }
        }
    }
    Distribution::from_counts(TransportMode::ALL.iter().map(|m| m.as_str().to_string()).collect(), &counts, epsilon)
}

/// Category active in each 15-minute slot; `None` where no record covers it.
pub fn intention_sequence(trajectory: &Trajectory, vocab: &Vocabulary) -> Result<Vec<Option<usize>>, MetricError> {
    let mut seq = vec![None; usize::from(SLOTS_PER_DAY)];
    for r in &trajectory.records {
        let k = vocab
            .index_of(&r.activity.intention)
            .ok_or_else(|| MetricError::UnknownCategory(r.activity.intention.to_string()))?;
        for s in r.start.slot()..r.end.slot() {
            seq[usize::from(s)] = Some(k);
        }
    }
    Ok(seq)
}

/// Joint (slot, category) frequencies over the population, flattened
/// slot-major into 96 × K cells.
pub fn intention_sequence_distribution(
    trajectories: &[Trajectory],
    vocab: &Vocabulary,
    epsilon: f64,
) -> Result<Distribution, MetricError> {
    let k = vocab.len();
    let mut counts = vec![0.0; usize::from(SLOTS_PER_DAY) * k];
    for t in trajectories {
        for (s, c) in intention_sequence(t, vocab)?.into_iter().enumerate() {
            if let Some(c) = c {
                counts[s * k + c] += 1.0;
            }
        }
    }
    let labels = (0..SLOTS_PER_DAY).flat_map(|s| vocab.iter().map(move |c| format!("{s}:{c}"))).collect();
    Ok(Distribution::from_counts(labels, &counts, epsilon))
}

/// Shared histogram edges for radius of gyration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusBins {
    pub edges: Vec<f64>,
}

impl Default for RadiusBins {
    fn default() -> Self {
        Self::log_spaced(10.0, 50_000.0, 40)
    }
}

impl RadiusBins {
    pub fn log_spaced(low: f64, high: f64, bins: usize) -> Self {
        assert!(low > 0.0 && high > low && bins > 0, "log bins need 0 < low < high");
        let (a, b) = (low.ln(), high.ln());
        Self { edges: (0..=bins).map(|i| (a + (b - a) * i as f64 / bins as f64).exp()).collect() }
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin for `r`; values outside the edges go to the end bins.
    pub fn index(&self, r: f64) -> usize {
        let last = self.bins() - 1;
        if r.is_nan() || r < self.edges[0] {
            return 0;
        }
        self.edges.partition_point(|e| *e <= r).saturating_sub(1).min(last)
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges.windows(2).map(|w| format!("[{:.3},{:.3})", w[0], w[1])).collect()
    }
}

pub fn radius_distribution(trajectories: &[Trajectory], bins: &RadiusBins, epsilon: f64) -> Distribution {
    let mut counts = vec![0.0; bins.bins()];
    for t in trajectories {
        counts[bins.index(radius_of_gyration(t))] += 1.0;
    }
    Distribution::from_counts(bins.labels(), &counts, epsilon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub categories: Vocabulary,
    pub radius_bins: RadiusBins,
    pub epsilon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { categories: Vocabulary::default(), radius_bins: RadiusBins::default(), epsilon: DEFAULT_EPSILON }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionPair {
    pub generated: Distribution,
    pub reference: Distribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub jsd_intention: f64,
    pub jsd_locations: f64,
    pub jsd_mode: f64,
    pub jsd_radius: f64,
    pub final_score: f64,
    pub generated_count: usize,
    pub reference_count: usize,
    /// Keyed by metric name: intention, locations, mode, radius.
    pub distributions: BTreeMap<String, DistributionPair>,
}

/// Compares two populations on the four metrics.
pub fn evaluate(
    generated: &[Trajectory],
    reference: &[Trajectory],
    config: &EvalConfig,
) -> Result<EvaluationReport, MetricError> {
    if generated.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyPopulation);
    }
    let eps = config.epsilon;
    let pairs = [
        (
            "intention",
            intention_sequence_distribution(generated, &config.categories, eps)?,
            intention_sequence_distribution(reference, &config.categories, eps)?,
        ),
        ("locations", locations_distribution(generated, eps), locations_distribution(reference, eps)),
        ("mode", mode_distribution(generated, eps), mode_distribution(reference, eps)),
        (
            "radius",
            radius_distribution(generated, &config.radius_bins, eps),
            radius_distribution(reference, &config.radius_bins, eps),
        ),
    ];
    let mut d = [0.0; 4];
    let mut distributions = BTreeMap::new();
    for (i, (name, g, r)) in pairs.into_iter().enumerate() {
        d[i] = jsd(&g, &r)?;
        distributions.insert(name.to_string(), DistributionPair { generated: g, reference: r });
    }
    Ok(EvaluationReport {
        jsd_intention: d[0],
        jsd_locations: d[1],
        jsd_mode: d[2],
        jsd_radius: d[3],
        final_score: final_score(d[0], d[1], d[2], d[3])?,
        generated_count: generated.len(),
        reference_count: reference.len(),
        distributions,
    })
}

impl EvaluationReport {
    /// One CSV per metric: `label,p_generated,p_reference`.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>, csv::Error> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, pair) in &self.distributions {
            let path = dir.join(format!("{name}_distribution.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["label", "p_generated", "p_reference"])?;
            for ((label, g), r) in
                pair.generated.labels.iter().zip(&pair.generated.probabilities).zip(&pair.reference.probabilities)
            {
                w.write_record([label.as_str(), &g.to_string(), &r.to_string()])?;
            }
            w.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}
