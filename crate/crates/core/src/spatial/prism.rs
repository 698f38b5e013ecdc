//! Space-time prism checks: can a trip fit between two fixed times?

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geo::{haversine_m, GeoPoint};
use crate::time::{TimeOfDay, SLOT_MINUTES};
use crate::types::TransportMode;

const SLOT_SECONDS: f64 = SLOT_MINUTES as f64 * 60.0;

/// Straight-line travel speed per mode, in m/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeSpeedTable(BTreeMap<TransportMode, f64>);

impl Default for ModeSpeedTable {
    fn default() -> Self {
        use TransportMode::*;
        Self([(Walk, 1.4), (Bike, 4.0), (Ebike, 6.0), (Car, 8.3), (Bus, 5.5), (Subway, 11.0)].into_iter().collect())
    }
}

impl ModeSpeedTable {
    pub fn new(speeds: BTreeMap<TransportMode, f64>) -> Result<Self, ConfigError> {
        let mut table = Self::default();
        for (m, v) in speeds {
            table.0.insert(m, v);
        }
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for m in TransportMode::ALL {
            match self.0.get(&m) {
                Some(v) if v.is_finite() && *v > 0.0 => {}
                other => return Err(ConfigError::Invalid(format!("speed for {m} must be positive, got {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn speed(&self, mode: TransportMode) -> f64 {
        self.0[&mode]
    }

    pub fn travel_seconds(&self, distance_m: f64, mode: TransportMode) -> f64 {
        distance_m / self.speed(mode)
    }

    /// Travel time rounded up to whole grid slots.
    pub fn travel_slots(&self, distance_m: f64, mode: TransportMode) -> u32 {
        // the epsilon keeps exact multiples from spilling into an extra slot
        (self.travel_seconds(distance_m, mode) / SLOT_SECONDS - 1e-9).ceil().max(0.0) as u32
    }

    /// Fastest of `modes`.
    pub fn fastest(&self, modes: &[TransportMode]) -> Option<TransportMode> {
        modes.iter().copied().max_by(|a, b| self.speed(*a).total_cmp(&self.speed(*b)))
    }
}

/// True when `dest` can be reached from `origin` between `depart` and
/// `deadline` using the fastest of `available`.
pub fn prism_feasible(
    origin: GeoPoint,
    dest: GeoPoint,
    depart: TimeOfDay,
    deadline: TimeOfDay,
    speeds: &ModeSpeedTable,
    available: &[TransportMode],
) -> bool {
    let distance = haversine_m(origin, dest);
    if distance == 0.0 {
        return true;
    }
    let Some(fastest) = speeds.fastest(available) else {
        return false;
    };
    speeds.travel_seconds(distance, fastest) <= deadline.seconds_since(depart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::unproject_local;

    fn t(s: &str) -> TimeOfDay {
        TimeOfDay::parse(s).unwrap()
    }

    #[test]
    fn same_place_is_always_feasible() {
        let p = GeoPoint { lat: 23.1, lon: 113.3 };
        assert!(prism_feasible(p, p, t("08:00"), t("08:00"), &ModeSpeedTable::default(), &[]));
    }

    #[test]
    fn ten_kilometres() {
        let speeds = ModeSpeedTable::default();
        let o = GeoPoint { lat: 23.1, lon: 113.3 };
        let d = unproject_local(o, 0.0, 10_000.0);
        assert!((haversine_m(o, d) - 10_000.0).abs() < 1e-6);
        // walking: 10000 / 1.4 = 7143 s > 900 s
        assert!(!prism_feasible(o, d, t("08:00"), t("08:15"), &speeds, &[TransportMode::Walk]));
        // driving: 10000 / 8.3 = 1205 s <= 1800 s
        let car_owner = TransportMode::permitted(true, false);
        assert!(prism_feasible(o, d, t("08:00"), t("08:30"), &speeds, &car_owner));
        // without a car the subway (909 s) still misses a 15-minute window
        assert!(!prism_feasible(o, d, t("08:00"), t("08:15"), &speeds, &TransportMode::permitted(false, false)));
    }

    #[test]
    fn travel_slots_round_up() {
        let speeds = ModeSpeedTable::default();
        assert_eq!(speeds.travel_slots(0.0, TransportMode::Walk), 0);
        assert_eq!(speeds.travel_slots(1.0, TransportMode::Walk), 1);
        assert_eq!(speeds.travel_slots(1.4 * 900.0, TransportMode::Walk), 1);
        assert_eq!(speeds.travel_slots(1.4 * 900.0 + 1.0, TransportMode::Walk), 2);
        assert_eq!(speeds.fastest(&TransportMode::ALL), Some(TransportMode::Subway));
    }

    #[test]
    fn rejects_non_positive_speed() {
        let mut m = BTreeMap::new();
        m.insert(TransportMode::Bus, 0.0);
        assert!(ModeSpeedTable::new(m).is_err());
    }
}
