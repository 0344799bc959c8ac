//! Agent state vector and the online hourly response profile.

use serde::{Deserialize, Serialize};

use crate::clock::SimTime;
use crate::error::{Error, Result};

pub const HOURS: usize = 24;

/// Query decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Action {
    Skip = 0,
    Query = 1,
}

impl Action {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Action::Skip
        } else {
            Action::Query
        }
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a as u8
    }
}

impl TryFrom<u8> for Action {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Action::Skip),
            1 => Ok(Action::Query),
            _ => Err(Error::InvalidInput(format!("action must be 0 or 1, got {v}"))),
        }
    }
}

/// Normalized 4-component state, every component in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    /// Raw classifier score.
    pub s1: f64,
    /// Clipped time since the last query.
    pub s2: f64,
    /// Learned response rate of the current hour.
    pub s3: f64,
    /// Time of day.
    pub s4: f64,
}

impl AgentState {
    pub fn as_array(&self) -> [f64; 4] {
        [self.s1, self.s2, self.s3, self.s4]
    }

    pub fn is_normalized(&self) -> bool {
        self.as_array().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    /// Time since last query saturates here.
    pub gap_clip_minutes: f64,
    /// EMA step of the response-rate estimate.
    pub rate_smoothing: f64,
    /// Prior response rate of every hour.
    pub initial_rate: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            gap_clip_minutes: 180.0,
            rate_smoothing: 0.1,
            initial_rate: 0.5,
        }
    }
}

impl StateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_clip_minutes > 0.0) {
            return Err(Error::Config("gap_clip_minutes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rate_smoothing) || !(0.0..=1.0).contains(&self.initial_rate) {
            return Err(Error::Config("rate_smoothing and initial_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Normalized time since the last query. Pass `f64::INFINITY` before the
    /// first query.
    pub fn normalize_gap(&self, minutes_since_last_query: f64) -> f64 {
        minutes_since_last_query.clamp(0.0, self.gap_clip_minutes) / self.gap_clip_minutes
    }

    /// State from an explicit response rate. [`build_state`] looks the rate
    /// up in a profile; offline training supplies it directly.
    pub fn state_with_rate(
        &self,
        raw_score: f64,
        minutes_since_last_query: f64,
        response_rate: f64,
        timestamp: SimTime,
    ) -> AgentState {
        AgentState {
            s1: raw_score.clamp(0.0, 1.0),
            s2: self.normalize_gap(minutes_since_last_query),
            s3: response_rate.clamp(0.0, 1.0),
            s4: timestamp.hour_fraction() / HOURS as f64,
        }
    }
}

/// Builds the agent state for one instance.
pub fn build_state(
    raw_score: f64,
    minutes_since_last_query: f64,
    profile: &ResponseProfile,
    timestamp: SimTime,
    cfg: &StateConfig,
) -> AgentState {
    cfg.state_with_rate(raw_score, minutes_since_last_query, profile.rate[timestamp.hour()], timestamp)
}

/// Outcome of one instance as seen by the response profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub hour: usize,
    pub queried: bool,
    pub answered: bool,
}

/// Per-hour response-rate estimate, updated by an exponential moving average
/// over issued queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseProfile {
    pub rate: [f64; HOURS],
    pub issued: [u64; HOURS],
    pub answered: [u64; HOURS],
    pub smoothing: f64,
}

impl ResponseProfile {
    pub fn new(cfg: &StateConfig) -> Self {
        Self {
            rate: [cfg.initial_rate; HOURS],
            issued: [0; HOURS],
            answered: [0; HOURS],
            smoothing: cfg.rate_smoothing,
        }
    }

    /// Applies a batch of events in order. The batch is validated first, so
    /// an invalid event leaves the profile untouched.
    pub fn update(&mut self, events: &[QueryEvent]) -> Result<()> {
        for e in events {
            if e.hour >= HOURS {
                return Err(Error::Contract(format!("hour {} outside 0..24", e.hour)));
            }
            if e.answered && !e.queried {
                return Err(Error::Contract(format!(
                    "answer recorded at hour {} without a query",
                    e.hour
                )));
            }
        }
        let lambda = self.smoothing;
        for e in events.iter().filter(|e| e.queried) {
            let h = e.hour;
            self.issued[h] += 1;
            let outcome = if e.answered {
                self.answered[h] += 1;
                1.0
            } else {
                0.0
            };
            self.rate[h] = (1.0 - lambda) * self.rate[h] + lambda * outcome;
        }
        Ok(())
    }

    /// Cumulative answered / issued over all hours, `None` before any query.
    pub fn overall_ratio(&self) -> Option<f64> {
        let issued: u64 = self.issued.iter().sum();
        (issued > 0).then(|| self.answered.iter().sum::<u64>() as f64 / issued as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cfg() -> StateConfig {
        StateConfig::default()
    }

    #[test]
    fn gap_is_clipped() {
        let p = ResponseProfile::new(&cfg());
        let t = SimTime::from_hm(0, 8, 0);
        assert_eq!(build_state(0.1, 400.0, &p, t, &cfg()).s2, 1.0);
        assert_eq!(build_state(0.1, 90.0, &p, t, &cfg()).s2, 0.5);
        assert_eq!(build_state(0.1, f64::INFINITY, &p, t, &cfg()).s2, 1.0);
        assert_eq!(build_state(0.1, 0.0, &p, t, &cfg()).s2, 0.0);
    }

    #[test]
    fn components_at_noon() {
        let mut p = ResponseProfile::new(&cfg());
        p.rate[12] = 0.7;
        let s = build_state(0.33, 30.0, &p, SimTime::from_hm(2, 12, 0), &cfg());
        assert_eq!(s.s1, 0.33);
        assert_eq!(s.s3, 0.7);
        assert_eq!(s.s4, 0.5);
    }

    #[test]
    fn ema_single_answer() {
        let mut p = ResponseProfile::new(&cfg());
        p.update(&[QueryEvent {
            hour: 9,
            queried: true,
            answered: true,
        }])
        .unwrap();
        assert!((p.rate[9] - 0.55).abs() < 1e-15);
        assert_eq!(p.issued[9], 1);
        assert_eq!(p.answered[9], 1);
    }

    #[test]
    fn empty_update_is_identity() {
        let mut p = ResponseProfile::new(&cfg());
        let before = p.clone();
        p.update(&[]).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn answer_without_query_is_rejected() {
        let mut p = ResponseProfile::new(&cfg());
        let before = p.clone();
        let events = [
            QueryEvent {
                hour: 3,
                queried: true,
                answered: true,
            },
            QueryEvent {
                hour: 4,
                queried: false,
                answered: true,
            },
        ];
        assert!(matches!(p.update(&events), Err(Error::Contract(_))));
        assert_eq!(p, before);
    }

    #[test]
    fn ema_tracks_bernoulli_mean() {
        // a single EMA reading has std ~0.09 at smoothing 0.1, so average it
        let mut rng = crate::seed::rng(11);
        let mut p = ResponseProfile::new(&cfg());
        let mut sum = 0.0;
        for k in 0..5000 {
            let e = QueryEvent {
                hour: 20,
                queried: true,
                answered: rng.random::<f64>() < 0.8,
            };
            p.update(&[e]).unwrap();
            if k >= 100 {
                sum += p.rate[20];
            }
        }
        let mean = sum / 4900.0;
        assert!((mean - 0.8).abs() <= 0.02, "mean rate {mean}");
        // untouched hours keep the prior
        assert_eq!(p.rate[3], 0.5);
    }

    proptest::proptest! {
        #[test]
        fn state_is_normalized(score in 0.0f64..=1.0, gap in 0.0f64..10_000.0, secs in 0i64..10_000_000, rate in 0.0f64..=1.0) {
            let mut p = ResponseProfile::new(&cfg());
            let t = SimTime(secs);
            p.rate[t.hour()] = rate;
            let s = build_state(score, gap, &p, t, &cfg());
            proptest::prop_assert!(s.is_normalized());
        }

        #[test]
        fn gap_is_monotone(a in 0.0f64..1_000.0, b in 0.0f64..1_000.0) {
            let c = cfg();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(c.normalize_gap(lo) <= c.normalize_gap(hi));
            if lo >= 180.0 { proptest::prop_assert_eq!(c.normalize_gap(lo), 1.0); }
        }

        #[test]
        fn update_commutes_with_batch_splitting(
            raw in proptest::collection::vec((0usize..24, proptest::bool::ANY, proptest::bool::ANY), 0..60),
            cut in 0usize..60,
        ) {
            let events: Vec<QueryEvent> = raw.into_iter()
                .map(|(hour, queried, answered)| QueryEvent { hour, queried, answered: queried && answered })
                .collect();
            let cut = cut.min(events.len());
            let mut whole = ResponseProfile::new(&cfg());
            whole.update(&events).unwrap();
            let mut split = ResponseProfile::new(&cfg());
            split.update(&events[..cut]).unwrap();
            split.update(&events[cut..]).unwrap();
            proptest::prop_assert_eq!(whole, split);
        }
    }
}
