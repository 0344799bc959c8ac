use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;

/// Gini impurity of a node holding `positives` out of `n` samples.
pub fn gini(n: usize, positives: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = positives as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        positive: bool,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// Axis-aligned binary tree stored as a flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub features_per_split: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { positive } => return *positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn fit<R: Rng>(data: &Dataset, sample: &mut [usize], params: &TreeParams, rng: &mut R) -> Self {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let mut scratch = Vec::with_capacity(sample.len());
        tree.grow(data, sample, 0, params, rng, &mut scratch);
        tree
    }

    fn grow<R: Rng>(
        &mut self,
        data: &Dataset,
        sample: &mut [usize],
        depth: usize,
        params: &TreeParams,
        rng: &mut R,
        scratch: &mut Vec<(f64, bool)>,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        let n = sample.len();
        let positives = sample.iter().filter(|&&i| data.label(i)).count();
        let leaf = Node::Leaf {
            positive: 2 * positives > n,
        };
        self.nodes.push(leaf.clone());

        if depth >= params.max_depth || n < params.min_samples_split || positives == 0 || positives == n {
            return id;
        }
        let Some(best) = best_split(data, sample, positives, params, rng, scratch) else {
            return id;
        };

        let mut split_at = 0;
        for k in 0..n {
            if data.value(sample[k], best.feature) <= best.threshold {
                sample.swap(k, split_at);
                split_at += 1;
            }
        }
        let (lo, hi) = sample.split_at_mut(split_at);
        let left = self.grow(data, lo, depth + 1, params, rng, scratch);
        let right = self.grow(data, hi, depth + 1, params, rng, scratch);
        self.nodes[id as usize] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }
}

/// Best Gini split over a random subset of features. Candidates are the
/// midpoints between consecutive distinct values. Ties keep the first
/// candidate found, scanning features in sampled order and thresholds in
/// ascending order.
fn best_split<R: Rng>(
    data: &Dataset,
    sample: &[usize],
    positives: usize,
    params: &TreeParams,
    rng: &mut R,
    scratch: &mut Vec<(f64, bool)>,
) -> Option<BestSplit> {
    let n = sample.len();
    let d = data.n_features();
    let parent = gini(n, positives);
    let k = params.features_per_split.clamp(1, d);
    let mut best: Option<BestSplit> = None;

    for feature in index::sample(rng, d, k).into_iter() {
        scratch.clear();
        scratch.extend(sample.iter().map(|&i| (data.value(i, feature), data.label(i))));
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_pos = 0usize;
        for j in 0..n - 1 {
            if scratch[j].1 {
                left_pos += 1;
            }
            let (v, next) = (scratch[j].0, scratch[j + 1].0);
            if v == next {
                continue;
            }
            let n_left = j + 1;
            let n_right = n - n_left;
            let weighted = (n_left as f64 * gini(n_left, left_pos)
                + n_right as f64 * gini(n_right, positives - left_pos))
                / n as f64;
            let gain = parent - weighted;
            if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let mid = 0.5 * (v + next);
                let threshold = if mid < next { mid } else { v };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(10, 0), 0.0);
        assert_eq!(gini(10, 10), 0.0);
        assert!((gini(10, 5) - 0.5).abs() < 1e-15);
        assert_eq!(gini(0, 0), 0.0);
    }

    #[test]
    fn hand_built_tree_traversal() {
        let t = DecisionTree {
            nodes: vec![
                Node::Split {
                    feature: 1,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { positive: false },
                Node::Leaf { positive: true },
            ],
        };
        assert!(!t.predict(&[9.0, 0.5]));
        assert!(t.predict(&[9.0, 0.51]));
        assert_eq!(t.depth(), 1);
    }
}
