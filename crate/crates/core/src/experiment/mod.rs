//! The closed personalization loop.
//!
//! A held-out subject's stream is walked in blocks of `update_cadence`
//! instances. Inside a block each policy proposes instances to query; issued
//! queries are answered (or ignored) by the simulated subject. At the end of
//! every block the response profile is refreshed, the classifier is retrained
//! on the pooled population labels plus every label collected so far, and
//! recall is measured on the stream's tail, which never contributes training
//! labels.

mod metrics;
mod runner;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use metrics::{
    mean_trajectory, queries_to_target, recall_at_labels, smoothed, PolicySummary, QueriesToTarget,
};
pub use runner::{compare, repeat_seed, run_policy, Agents, LoopSettings, RunResult, TrajectoryPoint};
pub use scenario::{
    agent_episodes, pretrain, pretraining_data, train_agent, PreparedScenario, ScenarioConfig, SubjectData,
    SubjectSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    AlNoncontext,
    AlContext,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Random, PolicyKind::AlNoncontext, PolicyKind::AlContext];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::AlNoncontext => "al_noncontext",
            PolicyKind::AlContext => "al_context",
        }
    }

    pub fn needs_agent(self) -> bool {
        self != PolicyKind::Random
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Policy executed by `run`; `compare` runs all three.
    pub policy: PolicyKind,
    /// Instances per block; response rates and the classifier refresh at
    /// every block boundary.
    pub update_cadence: usize,
    /// Fraction of the stream, taken from the end, held out for testing.
    pub test_holdout_fraction: f64,
    pub repeats: usize,
    /// Equalize queries issued per block across policies in `compare`.
    pub query_budget_matching: bool,
    /// Per-instance query probability of a standalone random run.
    pub random_query_rate: f64,
    /// Forced-query probability of the deployed agents. Offline training
    /// explores with `agent.epsilon`; set this to 0 for a greedy deployment.
    pub exploration: f64,
    /// Trailing window (in blocks) of the recall smoothing used by
    /// queries-to-target.
    pub smoothing_window: usize,
    /// Target recall is the pretrained recall plus this gain.
    pub target_recall_gain: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::AlContext,
            update_cadence: 100,
            test_holdout_fraction: 0.25,
            repeats: 100,
            query_budget_matching: true,
            random_query_rate: 0.1,
            exploration: 0.05,
            smoothing_window: 3,
            target_recall_gain: 0.10,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.update_cadence == 0 {
            return Err(Error::Config("update_cadence must be >= 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if !(self.test_holdout_fraction > 0.0 && self.test_holdout_fraction < 1.0) {
            return Err(Error::Config("test_holdout_fraction must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.random_query_rate) {
            return Err(Error::Config("random_query_rate must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(Error::Config("exploration must lie in [0, 1]".into()));
        }
        if self.smoothing_window == 0 {
            return Err(Error::Config("smoothing_window must be >= 1".into()));
        }
        Ok(())
    }
}
