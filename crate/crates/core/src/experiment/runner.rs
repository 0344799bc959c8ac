use std::ops::Range;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::SubjectData;
use super::{ExperimentConfig, PolicyKind};
use crate::classifier::{evaluate_recall, Dataset, ForestConfig, ForestModel, LabelScheme};
use crate::clock::SimTime;
use crate::dqn::{select_action, QNetwork};
use crate::error::{Error, Result};
use crate::hrv::FEATURE_COUNT;
use crate::seed::{self, SimRng};
use crate::state::{build_state, Action, QueryEvent, ResponseProfile, StateConfig};
use crate::subject::respond;

/// Trained agents available to a comparison.
#[derive(Debug, Clone, Copy, Default)]
pub struct Agents<'a> {
    pub context: Option<&'a QNetwork>,
    pub noncontext: Option<&'a QNetwork>,
}

impl<'a> Agents<'a> {
    fn for_policy(&self, p: PolicyKind) -> Option<&'a QNetwork> {
        match p {
            PolicyKind::Random => None,
            PolicyKind::AlNoncontext => self.noncontext,
            PolicyKind::AlContext => self.context,
        }
    }
}

/// State of the loop after one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub block: usize,
    pub queries: usize,
    pub answered: usize,
    pub labels: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub repeat: usize,
    pub seed: u64,
    pub queries_issued: usize,
    pub answered: usize,
    pub labels_obtained: usize,
    /// Point 0 is the pretrained model; one point per block follows.
    pub trajectory: Vec<TrajectoryPoint>,
    /// Cumulative answered / issued after each block.
    pub response_rate_series: Vec<Option<f64>>,
    pub profile: ResponseProfile,
}

impl RunResult {
    pub fn pretrained_recall(&self) -> f64 {
        self.trajectory[0].recall
    }

    pub fn final_recall(&self) -> f64 {
        self.trajectory.last().map_or(f64::NAN, |p| p.recall)
    }

    pub fn answer_ratio(&self) -> Option<f64> {
        (self.queries_issued > 0).then(|| self.answered as f64 / self.queries_issued as f64)
    }
}

/// Fixed inputs shared by every policy of a run.
struct LoopContext<'a> {
    cfg: &'a ExperimentConfig,
    subject: &'a SubjectData,
    pretrain_data: &'a Dataset,
    pretrained: &'a ForestModel,
    forest: &'a ForestConfig,
    state: &'a StateConfig,
    scheme: &'a LabelScheme,
    exploration: f64,
}

impl LoopContext<'_> {
    fn blocks(&self) -> Result<Vec<Range<usize>>> {
        let k = self.cfg.update_cadence;
        let end = self.subject.train_end;
        if end < k {
            return Err(Error::Config(format!(
                "training stream has {end} instances, shorter than the update cadence {k}"
            )));
        }
        Ok((0..end).step_by(k).map(|s| s..(s + k).min(end)).collect())
    }
}

struct PolicyRunner<'a> {
    policy: PolicyKind,
    agent: Option<&'a QNetwork>,
    model: ForestModel,
    profile: ResponseProfile,
    collected: Dataset,
    collected_from: Vec<usize>,
    labels_at_last_fit: usize,
    last_query: Option<SimTime>,
    explore_rng: SimRng,
    select_rng: SimRng,
    response_rng: SimRng,
    forest_seed: u64,
    result: RunResult,
}

impl<'a> PolicyRunner<'a> {
    fn new(ctx: &LoopContext<'_>, policy: PolicyKind, agent: Option<&'a QNetwork>, repeat: usize, repeat_seed: u64) -> Result<Self> {
        if policy.needs_agent() && agent.is_none() {
            return Err(Error::Config(format!("policy {policy} needs a trained agent")));
        }
        let pretrained_recall = evaluate_recall(ctx.pretrained, &ctx.subject.test)?;
        let stream = |name: &str| seed::rng(seed::derive_named(seed::derive_named(repeat_seed, policy.name()), name));
        Ok(Self {
            policy,
            agent,
            model: ctx.pretrained.clone(),
            profile: ResponseProfile::new(ctx.state),
            collected: Dataset::new(FEATURE_COUNT),
            collected_from: Vec::new(),
            labels_at_last_fit: 0,
            last_query: None,
            explore_rng: stream("explore"),
            select_rng: stream("select"),
            response_rng: stream("respond"),
            forest_seed: seed::derive_named(repeat_seed, "forest"),
            result: RunResult {
                policy,
                repeat,
                seed: repeat_seed,
                queries_issued: 0,
                answered: 0,
                labels_obtained: 0,
                trajectory: vec![TrajectoryPoint {
                    block: 0,
                    queries: 0,
                    answered: 0,
                    labels: 0,
                    recall: pretrained_recall,
                }],
                response_rate_series: vec![None],
                profile: ResponseProfile::new(ctx.state),
            },
        })
    }

    /// Instances the policy would like to query in `block`, in stream order.
    /// The random policy returns every candidate when `all_candidates` is set.
    fn propose(&mut self, ctx: &LoopContext<'_>, block: Range<usize>, all_candidates: bool) -> Vec<usize> {
        match (self.policy, self.agent) {
            (PolicyKind::Random, _) if all_candidates => block.collect(),
            (PolicyKind::Random, _) => {
                let rate = ctx.cfg.random_query_rate;
                block.filter(|_| self.select_rng.random::<f64>() < rate).collect()
            }
            (_, Some(agent)) => {
                let mut last = self.last_query;
                let mut picks = Vec::new();
                for i in block {
                    let inst = &ctx.subject.instances[i];
                    let score = self.model.predict_raw(&inst.features.to_array());
                    let gap = last.map_or(f64::INFINITY, |t| inst.timestamp.minutes_since(t));
                    let s = build_state(score, gap, &self.profile, inst.timestamp, ctx.state);
                    if select_action(agent, &s, ctx.exploration, &mut self.explore_rng) == Action::Query {
                        picks.push(i);
                        last = Some(inst.timestamp);
                    }
                }
                picks
            }
            (_, None) => unreachable!("checked in PolicyRunner::new"),
        }
    }

    fn downsample(&mut self, proposals: Vec<usize>, budget: usize) -> Vec<usize> {
        if proposals.len() <= budget {
            return proposals;
        }
        let mut keep = index::sample(&mut self.select_rng, proposals.len(), budget).into_vec();
        keep.sort_unstable();
        keep.into_iter().map(|k| proposals[k]).collect()
    }

    /// Issues the selected queries, records answers and refreshes the
    /// response profile.
    fn commit(&mut self, ctx: &LoopContext<'_>, selected: &[usize]) -> Result<()> {
        let mut events = Vec::with_capacity(selected.len());
        for &i in selected {
            let inst = &ctx.subject.instances[i];
            let reply = respond(&ctx.subject.profile, inst, inst.timestamp, &mut self.response_rng);
            events.push(QueryEvent {
                hour: inst.timestamp.hour(),
                queried: true,
                answered: reply.is_some(),
            });
            self.result.queries_issued += 1;
            if let Some(level) = reply {
                self.result.answered += 1;
                if let Some(y) = ctx.scheme.map_label(level) {
                    self.collected.push(&inst.features.to_array(), y)?;
                    self.collected_from.push(i);
                }
            }
        }
        if let Some(&i) = selected.last() {
            self.last_query = Some(ctx.subject.instances[i].timestamp);
        }
        self.result.labels_obtained = self.collected.len();
        self.profile.update(&events)
    }

    /// Retrains on population labels plus collected labels when new labels
    /// arrived, then records recall on the test tail.
    fn refresh(&mut self, ctx: &LoopContext<'_>, block: usize) -> Result<()> {
        if let Some(&i) = self.collected_from.iter().find(|&&i| i >= ctx.subject.train_end) {
            return Err(Error::Contract(format!("label from test instance {i} reached training")));
        }
        let recall = if self.collected.len() > self.labels_at_last_fit {
            let mut data = ctx.pretrain_data.clone();
            data.extend(&self.collected)?;
            let forest = ForestConfig {
                seed: seed::derive(self.forest_seed, block as u64),
                ..ctx.forest.clone()
            };
            self.model = ForestModel::train(&data, &forest)?;
            self.labels_at_last_fit = self.collected.len();
            evaluate_recall(&self.model, &ctx.subject.test)?
        } else {
            self.result.trajectory.last().expect("seeded with pretrained point").recall
        };
        let r = &mut self.result;
        r.trajectory.push(TrajectoryPoint {
            block,
            queries: r.queries_issued,
            answered: r.answered,
            labels: r.labels_obtained,
            recall,
        });
        r.response_rate_series.push(r.answer_ratio());
        Ok(())
    }

    fn finish(mut self) -> RunResult {
        self.result.profile = self.profile;
        self.result
    }
}

/// Settings shared by the loop functions.
#[derive(Debug, Clone, Copy)]
pub struct LoopSettings<'a> {
    pub forest: &'a ForestConfig,
    pub state: &'a StateConfig,
    pub label_scheme: &'a LabelScheme,
    /// Forced-query probability of the agents during deployment.
    pub exploration: f64,
}

/// Runs one repeat of a single policy without budget coordination. Random
/// selection queries each instance with probability `random_query_rate`.
pub fn run_policy(
    cfg: &ExperimentConfig,
    settings: LoopSettings<'_>,
    subject: &SubjectData,
    pretrain_data: &Dataset,
    pretrained: &ForestModel,
    agent: Option<&QNetwork>,
    repeat: usize,
    repeat_seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    let ctx = LoopContext {
        cfg,
        subject,
        pretrain_data,
        pretrained,
        forest: settings.forest,
        state: settings.state,
        scheme: settings.label_scheme,
        exploration: settings.exploration,
    };
    let mut runner = PolicyRunner::new(&ctx, cfg.policy, agent, repeat, repeat_seed)?;
    for (b, block) in ctx.blocks()?.into_iter().enumerate() {
        let picks = runner.propose(&ctx, block, false);
        runner.commit(&ctx, &picks)?;
        runner.refresh(&ctx, b + 1)?;
    }
    Ok(runner.finish())
}

/// Runs all three policies side by side for `cfg.repeats` repeats.
///
/// With budget matching, every block issues the same number of queries under
/// each policy: the smaller of the two agents' proposal counts. The other
/// agent is down-sampled uniformly and random selection draws that many
/// instances uniformly from the block.
pub fn compare(
    cfg: &ExperimentConfig,
    settings: LoopSettings<'_>,
    subject: &SubjectData,
    pretrain_data: &Dataset,
    pretrained: &ForestModel,
    agents: Agents<'_>,
    master_seed: u64,
) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let ctx = LoopContext {
        cfg,
        subject,
        pretrain_data,
        pretrained,
        forest: settings.forest,
        state: settings.state,
        scheme: settings.label_scheme,
        exploration: settings.exploration,
    };
    let blocks = ctx.blocks()?;
    let per_repeat: Vec<Result<Vec<RunResult>>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|repeat| {
            let repeat_seed = repeat_seed(master_seed, repeat);
            let mut runners = PolicyKind::ALL
                .iter()
                .map(|&p| PolicyRunner::new(&ctx, p, agents.for_policy(p), repeat, repeat_seed))
                .collect::<Result<Vec<_>>>()?;
            for (b, block) in blocks.iter().enumerate() {
                let matched = cfg.query_budget_matching;
                let mut proposals: Vec<Vec<usize>> = runners
                    .iter_mut()
                    .map(|r| r.propose(&ctx, block.clone(), matched))
                    .collect();
                if matched {
                    let budget = runners
                        .iter()
                        .zip(&proposals)
                        .filter(|(r, _)| r.policy.needs_agent())
                        .map(|(_, p)| p.len())
                        .min()
                        .unwrap_or(0);
                    for (r, p) in runners.iter_mut().zip(proposals.iter_mut()) {
                        *p = r.downsample(std::mem::take(p), budget);
                    }
                }
                for (r, p) in runners.iter_mut().zip(&proposals) {
                    r.commit(&ctx, p)?;
                    r.refresh(&ctx, b + 1)?;
                }
            }
            Ok(runners.into_iter().map(PolicyRunner::finish).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.repeats * 3);
    for r in per_repeat {
        out.extend(r?);
    }
    Ok(out)
}

/// Seed of repeat `repeat` under `master_seed`, as used by [`compare`].
pub fn repeat_seed(master_seed: u64, repeat: usize) -> u64 {
    seed::derive(seed::derive_named(master_seed, "repeat"), repeat as u64)
}
