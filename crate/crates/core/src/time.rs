//! The 15-minute day grid.
//!
//! A day is 96 slots of 15 minutes. Activity starts live on slots `0..=95`;
//! interval ends may additionally take the value [`TimeOfDay::DAY_END`]
//! (rendered `24:00`), so that `[start, end)` intervals can tile the whole day.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TimeError;

pub const SLOT_MINUTES: u16 = 15;
pub const SLOTS_PER_DAY: u8 = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeOfDay(u8);

impl TimeOfDay {
    pub const MIDNIGHT: Self = Self(0);
    pub const LAST_SLOT: Self = Self(SLOTS_PER_DAY - 1);
    /// Exclusive end bound of the day. Only valid as an interval end.
    pub const DAY_END: Self = Self(SLOTS_PER_DAY);

    /// A start slot in `0..=95`.
    pub fn from_slot(slot: u8) -> Option<Self> {
        (slot < SLOTS_PER_DAY).then_some(Self(slot))
    }

    /// Like [`from_slot`](Self::from_slot) but also accepts the day-end bound.
    pub fn bound(slot: u8) -> Option<Self> {
        (slot <= SLOTS_PER_DAY).then_some(Self(slot))
    }

    pub fn slot(self) -> u8 {
        self.0
    }

    pub fn minutes(self) -> u16 {
        u16::from(self.0) * SLOT_MINUTES
    }

    pub fn is_day_end(self) -> bool {
        self.0 == SLOTS_PER_DAY
    }

    /// Snap minutes-since-midnight to the nearest grid slot. A remainder of
    /// 7 minutes or less rounds down, 8 or more rounds up. Results past the
    /// last slot clamp to 23:45.
    pub fn nearest(minutes: u16) -> Self {
        let rem = minutes % SLOT_MINUTES;
        let mut slot = minutes / SLOT_MINUTES;
        if rem >= 8 {
            slot += 1;
        }
        Self(slot.min(u16::from(SLOTS_PER_DAY - 1)) as u8)
    }

    /// Parse `HH:MM` (one- or two-digit hour, 24-hour clock) and snap to the grid.
    pub fn parse(text: &str) -> Result<Self, TimeError> {
        parse_clock_minutes(text).map(Self::nearest)
    }

    /// Parse an interval bound: any `HH:MM` accepted by [`parse`](Self::parse),
    /// or `24:00` for [`DAY_END`](Self::DAY_END).
    pub fn parse_bound(text: &str) -> Result<Self, TimeError> {
        if text.trim() == "24:00" {
            return Ok(Self::DAY_END);
        }
        Self::parse(text)
    }

    /// Adds slots, saturating at [`DAY_END`](Self::DAY_END).
    pub fn saturating_add(self, slots: u32) -> Self {
        let s = u32::from(self.0).saturating_add(slots);
        Self(s.min(u32::from(SLOTS_PER_DAY)) as u8)
    }

    /// Slots from `earlier` to `self`, zero if `earlier` is later.
    pub fn slots_since(self, earlier: Self) -> u32 {
        u32::from(self.0.saturating_sub(earlier.0))
    }

    pub fn seconds_since(self, earlier: Self) -> f64 {
        f64::from(self.slots_since(earlier)) * f64::from(SLOT_MINUTES) * 60.0
    }
}

/// Minutes since midnight for an `HH:MM` clock string, without snapping.
pub fn parse_clock_minutes(text: &str) -> Result<u16, TimeError> {
    let raw = text.trim();
    let malformed = |token: &str| TimeError::Malformed { input: text.to_string(), token: token.to_string() };
    let (hh, mm) = raw.split_once(':').ok_or_else(|| malformed(raw))?;
    if hh.is_empty() || hh.len() > 2 || !hh.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(hh));
    }
    if mm.len() != 2 || !mm.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(mm));
    }
    let hours: u16 = hh.parse().map_err(|_| malformed(hh))?;
    let minutes: u16 = mm.parse().map_err(|_| malformed(mm))?;
    if hours > 23 {
        return Err(malformed(hh));
    }
    if minutes > 59 {
        return Err(malformed(mm));
    }
    Ok(hours * 60 + minutes)
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.minutes();
        write!(f, "{:02}:{:02}", m / 60, m % 60)
    }
}

impl FromStr for TimeOfDay {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_bound(s)
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse_bound(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Nearest grid slot by exhaustive distance comparison, ties to the later slot.
    fn oracle(minutes: u16) -> u8 {
        let mut best = 0u16;
        for slot in 0..=96u16 {
            let d = (slot * 15).abs_diff(minutes);
            let bd = (best * 15).abs_diff(minutes);
            if d <= bd {
                best = slot;
            }
        }
        best.min(95) as u8
    }

    #[test]
    fn midnight_is_slot_zero() {
        assert_eq!(TimeOfDay::parse("00:00").unwrap().slot(), 0);
    }

    #[test]
    fn rounding_matches_nearest_grid_oracle() {
        for m in 0..1440u16 {
            let text = format!("{:02}:{:02}", m / 60, m % 60);
            assert_eq!(TimeOfDay::parse(&text).unwrap().slot(), oracle(m), "{text}");
        }
        assert_eq!(TimeOfDay::parse("08:07").unwrap().slot(), 32);
        assert_eq!(TimeOfDay::parse("08:08").unwrap().slot(), 33);
        assert_eq!(TimeOfDay::parse("08:10").unwrap().slot(), 33);
        assert_eq!(TimeOfDay::parse("23:59").unwrap().slot(), 95);
    }

    #[test]
    fn render_parse_round_trip() {
        for slot in 0..96 {
            let t = TimeOfDay::from_slot(slot).unwrap();
            assert_eq!(TimeOfDay::parse(&t.to_string()).unwrap(), t);
        }
        assert_eq!(TimeOfDay::DAY_END.to_string(), "24:00");
        assert_eq!(TimeOfDay::parse_bound("24:00").unwrap(), TimeOfDay::DAY_END);
    }

    #[test]
    fn malformed_input_names_token() {
        for (input, token) in [("24:00", "24"), ("7h30", "7h30"), ("08:5", "5"), ("08:60", "60"), ("ab:00", "ab")] {
            match TimeOfDay::parse(input) {
                Err(TimeError::Malformed { token: t, .. }) => assert_eq!(t, token, "{input}"),
                other => panic!("{input}: {other:?}"),
            }
        }
        assert_eq!(TimeOfDay::parse("7:30").unwrap().to_string(), "07:30");
    }
}
