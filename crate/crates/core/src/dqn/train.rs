use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{bellman_target, select_action, Adam, DqnConfig, QNetwork, ReplayBuffer, Sample, Transition};
use crate::clock::SimTime;
use crate::error::{Error, Result};
use crate::reward::{self, RewardConfig};
use crate::state::{Action, AgentState, StateConfig};

/// Reward signal seen by the trainer.
pub trait RewardModel {
    fn reward(&self, s: &AgentState, a: Action) -> f64;
}

impl RewardModel for RewardConfig {
    fn reward(&self, s: &AgentState, a: Action) -> f64 {
        reward::reward(s, a, self)
    }
}

impl<F: Fn(&AgentState, Action) -> f64> RewardModel for F {
    fn reward(&self, s: &AgentState, a: Action) -> f64 {
        self(s, a)
    }
}

/// Action-independent part of one environment step. The time-since-last-query
/// component is filled in by the trainer from its own query history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepContext {
    pub raw_score: f64,
    pub timestamp: SimTime,
    pub response_rate: f64,
}

/// Supplies episodes forever; an episode is a finite ordered sequence of
/// step contexts.
pub trait EpisodeSource {
    fn next_episode(&mut self) -> Vec<StepContext>;
}

/// Replays a fixed list of episodes in order, starting over at the end.
#[derive(Debug, Clone)]
pub struct CyclicEpisodes {
    episodes: Vec<Vec<StepContext>>,
    next: usize,
}

impl CyclicEpisodes {
    pub fn new(episodes: Vec<Vec<StepContext>>) -> Self {
        Self { episodes, next: 0 }
    }
}

impl EpisodeSource for CyclicEpisodes {
    fn next_episode(&mut self) -> Vec<StepContext> {
        if self.episodes.is_empty() {
            return Vec::new();
        }
        let ep = self.episodes[self.next].clone();
        self.next = (self.next + 1) % self.episodes.len();
        ep
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    /// Global step count when the episode ended.
    pub step: usize,
    pub episode: usize,
    pub epsilon: f64,
    /// Mean training loss over the episode's updates (0 before warm-up).
    pub loss: f64,
    pub episode_reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn episode_rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.episode_reward).collect()
    }

    /// CSV with columns `step,episode,epsilon,loss,episode_reward`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.episodes {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn minutes_since(last: Option<SimTime>, now: SimTime) -> f64 {
    last.map_or(f64::INFINITY, |t| now.minutes_since(t))
}

/// Trains `net` on episodes from `source` for `cfg.train_steps` steps.
///
/// Behavior is epsilon-forced-query greedy on the online network. Updates
/// sample uniformly from a FIFO replay buffer and bootstrap from a target
/// network synchronized every `cfg.target_sync_interval` steps.
pub fn train_offline<S: EpisodeSource + ?Sized, M: RewardModel + ?Sized>(
    net: &QNetwork,
    source: &mut S,
    cfg: &DqnConfig,
    reward: &M,
    state_cfg: &StateConfig,
) -> Result<(QNetwork, TrainingLog)> {
    cfg.validate()?;
    state_cfg.validate()?;
    let mut online = net.clone();
    let mut target = online.clone();
    let mut adam = Adam::new(online.param_count(), cfg.learning_rate);
    let mut replay: ReplayBuffer<Transition> = ReplayBuffer::new(cfg.replay_capacity);
    let mut rng = crate::seed::rng(crate::seed::derive_named(cfg.seed, "dqn-train"));
    let mut log = TrainingLog::default();

    let mut step = 0usize;
    let mut episode = 0usize;
    let mut batch = Vec::with_capacity(cfg.batch_size);

    while step < cfg.train_steps {
        let ep = source.next_episode();
        if ep.is_empty() {
            return Err(Error::Config("episode source produced an empty episode".into()));
        }
        let mut last_query: Option<SimTime> = None;
        let mut ep_reward = 0.0;
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);

        for (k, ctx) in ep.iter().enumerate() {
            if step >= cfg.train_steps {
                break;
            }
            let state = state_cfg.state_with_rate(
                ctx.raw_score,
                minutes_since(last_query, ctx.timestamp),
                ctx.response_rate,
                ctx.timestamp,
            );
            let action = select_action(&online, &state, cfg.epsilon, &mut rng);
            let next_ctx = ep.get(k + 1);

            let actions: &[Action] = if cfg.train_both_actions {
                &[Action::Skip, Action::Query]
            } else {
                std::slice::from_ref(&action)
            };
            for &a in actions {
                let r = reward.reward(&state, a);
                let (next_state, terminal) = match next_ctx {
                    Some(n) => {
                        let last = if a == Action::Query { Some(ctx.timestamp) } else { last_query };
                        let s = state_cfg.state_with_rate(
                            n.raw_score,
                            minutes_since(last, n.timestamp),
                            n.response_rate,
                            n.timestamp,
                        );
                        (s, false)
                    }
                    None => (state, true),
                };
                if !r.is_finite() {
                    return Err(Error::Training(format!("non-finite reward {r}")));
                }
                replay.push(Transition {
                    state,
                    action: a,
                    reward: r,
                    next_state,
                    terminal,
                });
                if a == action {
                    ep_reward += r;
                }
            }
            if action == Action::Query {
                last_query = Some(ctx.timestamp);
            }

            if replay.len() >= cfg.batch_size {
                batch.clear();
                for t in replay.sample(cfg.batch_size, &mut rng) {
                    let q_next = target.q_values(&t.next_state.as_array());
                    let q_cur = online.q_values(&t.state.as_array())[t.action.index()];
                    batch.push(Sample {
                        state: t.state.as_array(),
                        action: t.action,
                        target: bellman_target(t.reward, q_next[0].max(q_next[1]), q_cur, t.terminal, cfg),
                    });
                }
                let (loss, grad) = online.loss_and_gradient(&batch);
                adam.step(online.params_mut(), &grad);
                loss_sum += loss;
                loss_n += 1;
            }

            step += 1;
            if step.is_multiple_of(cfg.target_sync_interval) {
                target = online.clone();
            }
        }

        log.episodes.push(EpisodeLog {
            step,
            episode,
            epsilon: cfg.epsilon,
            loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 },
            episode_reward: ep_reward,
        });
        episode += 1;
    }

    if !online.all_finite() {
        return Err(Error::CorruptedModel("training diverged to non-finite parameters".into()));
    }
    Ok((online, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_episode_is_a_config_error() {
        let cfg = DqnConfig {
            hidden: vec![4],
            train_steps: 10,
            ..Default::default()
        };
        let net = cfg.init_network().unwrap();
        let mut src = CyclicEpisodes::new(vec![]);
        let err = train_offline(&net, &mut src, &cfg, &RewardConfig::default(), &StateConfig::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn log_csv_columns() {
        let log = TrainingLog {
            episodes: vec![EpisodeLog {
                step: 10,
                episode: 0,
                epsilon: 0.05,
                loss: 0.5,
                episode_reward: 3.0,
            }],
        };
        let mut out = Vec::new();
        log.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("step,episode,epsilon,loss,episode_reward\n10,0,0.05,0.5,3.0"));
    }
}
