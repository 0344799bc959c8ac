//! Sigmoid reward shaping for the query agent.
//!
//! Three components, each a soft step on one state variable:
//!
//! - `r1`: band-pass on the classifier score over `[region_low, region_high]`
//! - `r2`: rises with time since the last query
//! - `r3`: rises with the hour's response rate
//!
//! `R(s, query) = scale * r1 * r2 * r3` and `R(s, skip) = 1 - r1 * r2 * r3`.
//! Time of day never enters directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Action, AgentState};

/// `1 / (1 + exp(-alpha (x - beta)))`.
pub fn sigmoid(x: f64, alpha: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-alpha * (x - beta)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub region_low: f64,
    pub region_high: f64,
    pub alpha_r1: f64,
    pub alpha_r2: f64,
    pub beta_r2: f64,
    pub alpha_r3: f64,
    pub beta_r3: f64,
    pub query_reward_scale: f64,
    /// Use the fixed r1 centers 0.5 and 1.3 (steepness ±100) instead of the
    /// `[region_low, region_high]` band. Only scores above 0.5 pass.
    pub literal_r1: bool,
    /// Drop r2 and r3 so the reward depends on the classifier score alone.
    pub uncertainty_only: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            region_low: 0.2,
            region_high: 0.6,
            alpha_r1: 100.0,
            alpha_r2: 10.0,
            beta_r2: 0.3,
            alpha_r3: 100.0,
            beta_r3: 0.4,
            query_reward_scale: 2.0,
            literal_r1: false,
            uncertainty_only: false,
        }
    }
}

impl RewardConfig {
    pub fn uncertainty_only() -> Self {
        Self {
            uncertainty_only: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.region_low && self.region_low < self.region_high && self.region_high <= 1.0) {
            return Err(Error::Config(format!(
                "reward region [{}, {}] must satisfy 0 <= low < high <= 1",
                self.region_low, self.region_high
            )));
        }
        if !(self.query_reward_scale > 0.0) {
            return Err(Error::Config("query_reward_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardComponents {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl RewardComponents {
    pub fn product(&self) -> f64 {
        self.r1 * self.r2 * self.r3
    }
}

pub fn components(s: &AgentState, cfg: &RewardConfig) -> RewardComponents {
    let r1 = if cfg.literal_r1 {
        sigmoid(s.s1, 100.0, 0.5) * sigmoid(s.s1, -100.0, 1.3)
    } else {
        sigmoid(s.s1, cfg.alpha_r1, cfg.region_low) * sigmoid(s.s1, -cfg.alpha_r1, cfg.region_high)
    };
    if cfg.uncertainty_only {
        return RewardComponents { r1, r2: 1.0, r3: 1.0 };
    }
    RewardComponents {
        r1,
        r2: sigmoid(s.s2, cfg.alpha_r2, cfg.beta_r2),
        r3: sigmoid(s.s3, cfg.alpha_r3, cfg.beta_r3),
    }
}

pub fn reward(s: &AgentState, action: Action, cfg: &RewardConfig) -> f64 {
    let p = components(s, cfg).product();
    match action {
        Action::Query => cfg.query_reward_scale * p,
        Action::Skip => 1.0 - p,
    }
}
