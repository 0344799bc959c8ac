//! Query-decision agent: Q-network, epsilon-forced query policy and the
//! offline Bellman training loop.

pub mod bandit;
mod network;
mod optim;
mod replay;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Action, AgentState};

pub use network::{QNetwork, Sample, ACTION_DIM, QNET_FORMAT_VERSION, STATE_DIM};
pub use optim::Adam;
pub use replay::ReplayBuffer;
pub use train::{
    train_offline, CyclicEpisodes, EpisodeLog, EpisodeSource, RewardModel, StepContext, TrainingLog,
};

/// How the regression target is formed from a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellmanMode {
    /// `r + gamma * max_a Q'(s', a)`.
    #[default]
    Conventional,
    /// `(1 - alpha) Q(s, a) + gamma (r + alpha max_a Q'(s', a))`, the blend
    /// with discount outside and learning rate inside the bracket.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub discount: f64,
    /// Probability of a forced query during offline training.
    pub epsilon: f64,
    pub train_steps: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub target_sync_interval: usize,
    pub bellman_mode: BellmanMode,
    pub hidden: Vec<usize>,
    pub l1: f64,
    pub l2: f64,
    /// Store a transition for both actions at every step; the reward is
    /// known for each action, so the untaken one is a free training sample.
    pub train_both_actions: bool,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            discount: 0.9,
            epsilon: 0.05,
            train_steps: 200_000,
            batch_size: 32,
            replay_capacity: 10_000,
            target_sync_interval: 500,
            bellman_mode: BellmanMode::Conventional,
            hidden: QNetwork::DEFAULT_HIDDEN.to_vec(),
            l1: 1e-5,
            l2: 1e-5,
            train_both_actions: true,
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::Config("discount must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config("epsilon must lie in [0, 1]".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.target_sync_interval == 0 {
            return Err(Error::Config(
                "batch_size, replay_capacity and target_sync_interval must be >= 1".into(),
            ));
        }
        if self.l1 < 0.0 || self.l2 < 0.0 {
            return Err(Error::Config("regularization strengths must be >= 0".into()));
        }
        Ok(())
    }

    pub fn init_network(&self) -> Result<QNetwork> {
        let mut rng = crate::seed::rng(crate::seed::derive_named(self.seed, "qnet-init"));
        QNetwork::random(&self.hidden, self.l1, self.l2, &mut rng)
    }
}

/// One experience tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: AgentState,
    pub action: Action,
    pub reward: f64,
    pub next_state: AgentState,
    pub terminal: bool,
}

/// Regression target for `Q(s, a)`. `q_current` is only read in literal
/// mode; terminal transitions drop the bootstrap term.
pub fn bellman_target(reward: f64, q_next_max: f64, q_current: f64, terminal: bool, cfg: &DqnConfig) -> f64 {
    let next = if terminal { 0.0 } else { q_next_max };
    match cfg.bellman_mode {
        BellmanMode::Conventional => reward + cfg.discount * next,
        BellmanMode::Literal => {
            (1.0 - cfg.learning_rate) * q_current + cfg.discount * (reward + cfg.learning_rate * next)
        }
    }
}

/// Tabular step `Q + alpha (target - Q)`.
pub fn tabular_update(q: f64, target: f64, alpha: f64) -> f64 {
    q + alpha * (target - q)
}

/// Greedy action, ties resolved to [`Action::Skip`].
pub fn greedy_action(q: [f64; 2]) -> Action {
    if q[1] > q[0] {
        Action::Query
    } else {
        Action::Skip
    }
}

/// With probability `epsilon` a forced query, otherwise greedy. One uniform
/// draw is consumed per call regardless of `epsilon`.
pub fn select_action<R: Rng>(net: &QNetwork, s: &AgentState, epsilon: f64, rng: &mut R) -> Action {
    let u: f64 = rng.random();
    if u < epsilon {
        return Action::Query;
    }
    greedy_action(net.q_values(&s.as_array()))
}
