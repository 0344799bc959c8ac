use serde::{Deserialize, Serialize};

use super::runner::{RunResult, TrajectoryPoint};
use super::{ExperimentConfig, PolicyKind};

/// Trailing moving average; early points average over what is available.
pub fn smoothed(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            let s = &values[lo..=i];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect()
}

/// Queries issued when the smoothed recall first reaches the pretrained
/// recall plus `gain`. `None` if the run never gets there.
pub fn queries_to_target(run: &RunResult, gain: f64, window: usize) -> Option<usize> {
    let target = run.pretrained_recall() + gain;
    let recalls: Vec<f64> = run.trajectory.iter().map(|p| p.recall).collect();
    smoothed(&recalls, window)
        .iter()
        .zip(&run.trajectory)
        .find(|(r, _)| **r >= target - 1e-12)
        .map(|(_, p)| p.queries)
}

/// Recall at the first trajectory point holding at least `labels` labels.
pub fn recall_at_labels(run: &RunResult, labels: usize) -> Option<f64> {
    run.trajectory.iter().find(|p| p.labels >= labels).map(|p| p.recall)
}

/// Queries-to-target over a set of runs. Runs that never reach the target
/// are counted separately; `censored_mean` charges them their total queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueriesToTarget {
    pub reached: usize,
    pub not_reached: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub censored_mean: f64,
}

impl QueriesToTarget {
    pub fn from_runs<'a>(runs: impl IntoIterator<Item = &'a RunResult>, gain: f64, window: usize) -> Self {
        let mut hits = Vec::new();
        let mut censored = Vec::new();
        for run in runs {
            match queries_to_target(run, gain, window) {
                Some(q) => {
                    hits.push(q as f64);
                    censored.push(q as f64);
                }
                None => censored.push(run.queries_issued as f64),
            }
        }
        let (mean, std) = mean_std(&hits).map_or((None, None), |(m, s)| (Some(m), Some(s)));
        Self {
            reached: hits.len(),
            not_reached: censored.len() - hits.len(),
            mean,
            std,
            censored_mean: mean_std(&censored).map_or(f64::NAN, |(m, _)| m),
        }
    }
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    Some((m, v.sqrt()))
}

/// Point-wise mean of trajectories with equal length. Counts are rounded
/// down after averaging.
pub fn mean_trajectory<'a>(runs: impl IntoIterator<Item = &'a RunResult>) -> Vec<TrajectoryPoint> {
    let mut sums: Vec<[f64; 4]> = Vec::new();
    let mut n = 0usize;
    for run in runs {
        if sums.len() < run.trajectory.len() {
            sums.resize(run.trajectory.len(), [0.0; 4]);
        }
        for (s, p) in sums.iter_mut().zip(&run.trajectory) {
            s[0] += p.queries as f64;
            s[1] += p.answered as f64;
            s[2] += p.labels as f64;
            s[3] += p.recall;
        }
        n += 1;
    }
    let n = n.max(1) as f64;
    sums.iter()
        .enumerate()
        .map(|(block, s)| TrajectoryPoint {
            block,
            queries: (s[0] / n) as usize,
            answered: (s[1] / n) as usize,
            labels: (s[2] / n) as usize,
            recall: s[3] / n,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub runs: usize,
    pub mean_queries: f64,
    pub mean_answered: f64,
    pub mean_labels: f64,
    /// Answered over issued, pooled across runs.
    pub response_ratio: f64,
    pub mean_pretrained_recall: f64,
    pub mean_final_recall: f64,
    pub queries_to_target: QueriesToTarget,
}

impl PolicySummary {
    /// One summary per policy present in `runs`, in policy order.
    pub fn from_runs(runs: &[RunResult], cfg: &ExperimentConfig) -> Vec<Self> {
        PolicyKind::ALL
            .iter()
            .filter_map(|&policy| {
                let mine: Vec<&RunResult> = runs.iter().filter(|r| r.policy == policy).collect();
                if mine.is_empty() {
                    return None;
                }
                let n = mine.len() as f64;
                let mean = |f: &dyn Fn(&RunResult) -> f64| mine.iter().map(|r| f(r)).sum::<f64>() / n;
                let issued: usize = mine.iter().map(|r| r.queries_issued).sum();
                let answered: usize = mine.iter().map(|r| r.answered).sum();
                Some(Self {
                    policy,
                    runs: mine.len(),
                    mean_queries: mean(&|r| r.queries_issued as f64),
                    mean_answered: mean(&|r| r.answered as f64),
                    mean_labels: mean(&|r| r.labels_obtained as f64),
                    response_ratio: if issued > 0 { answered as f64 / issued as f64 } else { f64::NAN },
                    mean_pretrained_recall: mean(&|r| r.pretrained_recall()),
                    mean_final_recall: mean(&|r| r.final_recall()),
                    queries_to_target: QueriesToTarget::from_runs(
                        mine.iter().copied(),
                        cfg.target_recall_gain,
                        cfg.smoothing_window,
                    ),
                })
            })
            .collect()
    }
}
