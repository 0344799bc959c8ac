//! Simulated wall clock. Time zero is midnight of day 0.

use serde::{Deserialize, Serialize};

pub const SECONDS_PER_MINUTE: i64 = 60;
pub const SECONDS_PER_HOUR: i64 = 3_600;
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Sensing cadence: one window every 15 minutes.
pub const SLOT_SECONDS: i64 = 15 * SECONDS_PER_MINUTE;

/// Seconds since the start of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub i64);

impl SimTime {
    pub fn from_hm(day: i64, hour: i64, minute: i64) -> Self {
        SimTime(day * SECONDS_PER_DAY + hour * SECONDS_PER_HOUR + minute * SECONDS_PER_MINUTE)
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    fn second_of_day(self) -> i64 {
        self.0.rem_euclid(SECONDS_PER_DAY)
    }

    /// Hour-of-day bucket in `0..24`.
    pub fn hour(self) -> usize {
        (self.second_of_day() / SECONDS_PER_HOUR) as usize
    }

    /// Hour of day including the fractional part, in `[0, 24)`.
    pub fn hour_fraction(self) -> f64 {
        self.second_of_day() as f64 / SECONDS_PER_HOUR as f64
    }

    pub fn minutes_since(self, earlier: SimTime) -> f64 {
        (self.0 - earlier.0) as f64 / SECONDS_PER_MINUTE as f64
    }

    pub fn plus_seconds(self, s: i64) -> Self {
        SimTime(self.0 + s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hour_buckets() {
        let t = SimTime::from_hm(3, 12, 30);
        assert_eq!(t.hour(), 12);
        assert!((t.hour_fraction() - 12.5).abs() < 1e-12);
        assert_eq!(SimTime::from_hm(1, 0, 0).hour(), 0);
        assert_eq!(SimTime::from_hm(0, 23, 59).hour(), 23);
    }

    #[test]
    fn minutes_between() {
        let a = SimTime::from_hm(0, 10, 0);
        let b = SimTime::from_hm(0, 11, 30);
        assert_eq!(b.minutes_since(a), 90.0);
    }
}
