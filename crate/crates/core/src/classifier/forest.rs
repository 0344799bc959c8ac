use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::Dataset;
use crate::error::{Error, Result};
use crate::hrv::FEATURE_COUNT;
use crate::seed;

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features considered per split, clamped to the feature count.
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub decision_threshold: f64,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            max_depth: 5,
            min_samples_split: 2,
            features_per_split: (FEATURE_COUNT as f64).sqrt().ceil() as usize,
            bootstrap: true,
            decision_threshold: 0.5,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(Error::Config("decision_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A trained ensemble. Immutable once built; retraining yields a new value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub feature_count: usize,
    pub decision_threshold: f64,
    pub config: ForestConfig,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    /// Trains one tree per derived seed. Each tree sees a bootstrap resample
    /// (when enabled) and a fresh random feature subset at every split.
    pub fn train(data: &Dataset, config: &ForestConfig) -> Result<Self> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::Training("empty training set".into()));
        }
        let pos = data.positives();
        if pos == 0 {
            return Err(Error::Training("training set has no positive (stressed) examples".into()));
        }
        if pos == data.len() {
            return Err(Error::Training("training set has no negative (not stressed) examples".into()));
        }
        if (0..data.len()).any(|i| data.row(i).iter().any(|v| !v.is_finite())) {
            return Err(Error::Training("training set contains non-finite features".into()));
        }

        let params = TreeParams {
            max_depth: config.max_depth,
            min_samples_split: config.min_samples_split.max(2),
            features_per_split: config.features_per_split,
        };
        let n = data.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(config.seed, t as u64));
                let mut sample: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(data, &mut sample, &params, &mut rng)
            })
            .collect();

        Ok(Self {
            format_version: FOREST_FORMAT_VERSION,
            feature_count: data.n_features(),
            decision_threshold: config.decision_threshold,
            config: config.clone(),
            trees,
        })
    }

    /// Number of trees voting "stressed".
    pub fn votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(x)).count()
    }

    /// Fraction of trees voting "stressed", in `[0, 1]`.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        self.votes(x) as f64 / self.trees.len() as f64
    }

    /// `predict_raw(x) >= threshold`.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_raw(x) >= self.decision_threshold
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                what: "classifier checkpoint",
                path: path.to_path_buf(),
                producer: "pretrain",
            });
        }
        let model: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if model.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "classifier",
                found: model.format_version,
                expected: FOREST_FORMAT_VERSION,
            });
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{DecisionTree, Node};
    use super::*;

    fn stump(positive_above: f64) -> DecisionTree {
        DecisionTree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: positive_above,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { positive: false },
                Node::Leaf { positive: true },
            ],
        }
    }

    fn hand_forest(thresholds: &[f64]) -> ForestModel {
        ForestModel {
            format_version: FOREST_FORMAT_VERSION,
            feature_count: 1,
            decision_threshold: 0.5,
            config: ForestConfig::default(),
            trees: thresholds.iter().map(|&t| stump(t)).collect(),
        }
    }

    #[test]
    fn vote_fraction() {
        let f = hand_forest(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.predict_raw(&[2.5]), 0.75);
        assert_eq!(f.predict_raw(&[-1.0]), 0.0);
        // exactly at the threshold counts as stressed
        assert_eq!(f.predict_raw(&[1.5]), 0.5);
        assert!(f.predict(&[1.5]));
        assert!(!f.predict(&[0.5]));
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = Dataset::from_rows(&[[1.0], [2.0]], &[false, false]).unwrap();
        let err = ForestModel::train(&ds, &ForestConfig::default()).unwrap_err();
        assert!(err.to_string().contains("positive"));
        let ds = Dataset::from_rows(&[[1.0], [2.0]], &[true, true]).unwrap();
        let err = ForestModel::train(&ds, &ForestConfig::default()).unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn invalid_config() {
        let ds = Dataset::from_rows(&[[1.0], [2.0]], &[false, true]).unwrap();
        let cfg = ForestConfig {
            n_trees: 0,
            ..Default::default()
        };
        assert!(matches!(ForestModel::train(&ds, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn missing_checkpoint_names_producer() {
        let err = ForestModel::load(Path::new("/nonexistent/forest.json")).unwrap_err();
        assert!(err.to_string().contains("caal pretrain"));
    }
}
