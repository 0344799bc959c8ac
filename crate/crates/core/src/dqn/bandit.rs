//! Two-context bandit used to validate the trainer.
//!
//! The classifier score is pinned inside the uncertainty band and steps are
//! spaced beyond the gap clip, so only the response rate varies: it is low or
//! high with equal probability. Actions do not influence future states.

use rand::Rng;

use super::{greedy_action, EpisodeSource, QNetwork, StepContext};
use crate::clock::{SimTime, SECONDS_PER_MINUTE};
use crate::seed::{self, SimRng};
use crate::state::{Action, AgentState, StateConfig};

pub const LOW_RATE: f64 = 0.1;
pub const HIGH_RATE: f64 = 0.9;
pub const SCORE: f64 = 0.4;
const STEP_MINUTES: i64 = 240;

pub struct TwoContextBandit {
    rng: SimRng,
    episode_len: usize,
}

impl TwoContextBandit {
    pub fn new(seed: u64, episode_len: usize) -> Self {
        Self {
            rng: seed::rng(seed::derive_named(seed, "bandit")),
            episode_len: episode_len.max(1),
        }
    }

    /// The two states the agent can observe at a given time.
    pub fn states(at: SimTime) -> [AgentState; 2] {
        let cfg = StateConfig::default();
        [LOW_RATE, HIGH_RATE].map(|rate| cfg.state_with_rate(SCORE, f64::INFINITY, rate, at))
    }

    /// Greedy action of `net` in the low- and high-rate context.
    pub fn greedy_policy(net: &QNetwork, at: SimTime) -> [Action; 2] {
        Self::states(at).map(|s| greedy_action(net.q_values(&s.as_array())))
    }
}

impl EpisodeSource for TwoContextBandit {
    fn next_episode(&mut self) -> Vec<StepContext> {
        (0..self.episode_len)
            .map(|k| StepContext {
                raw_score: SCORE,
                timestamp: SimTime(k as i64 * STEP_MINUTES * SECONDS_PER_MINUTE),
                response_rate: if self.rng.random::<bool>() { HIGH_RATE } else { LOW_RATE },
            })
            .collect()
    }
}
