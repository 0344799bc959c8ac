//! Binary stress detector: a bagged ensemble of depth-limited Gini trees.
//!
//! The ensemble's raw output is the fraction of trees voting "stressed"; the
//! query agent consumes that fraction directly as its uncertainty input.

mod forest;
mod tree;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{ForestConfig, ForestModel, FOREST_FORMAT_VERSION};
pub use tree::{gini, DecisionTree, Node};

/// Self-reported stress on a five-point scale, 0 ("not at all") to 4
/// ("extremely").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct StressLevel(u8);

impl StressLevel {
    pub const MAX: u8 = 4;

    pub fn new(level: u8) -> Result<Self> {
        if level > Self::MAX {
            return Err(Error::InvalidInput(format!("stress level {level} outside 0..=4")));
        }
        Ok(Self(level))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = StressLevel> {
        (0..=Self::MAX).map(StressLevel)
    }
}

impl TryFrom<u8> for StressLevel {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StressLevel> for u8 {
    fn from(l: StressLevel) -> u8 {
        l.0
    }
}

/// Maps five stress levels onto the binary stressed / not-stressed target.
/// Levels in neither set are dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelScheme {
    pub negative: BTreeSet<StressLevel>,
    pub positive: BTreeSet<StressLevel>,
}

impl Default for LabelScheme {
    /// `{0,1,2} -> not stressed`, `{3,4} -> stressed`.
    fn default() -> Self {
        Self::from_levels(&[0, 1, 2], &[3, 4]).expect("default scheme is valid")
    }
}

impl LabelScheme {
    pub fn from_levels(negative: &[u8], positive: &[u8]) -> Result<Self> {
        let to_set = |xs: &[u8]| -> Result<BTreeSet<StressLevel>> {
            xs.iter().map(|&l| StressLevel::new(l)).collect()
        };
        let scheme = Self {
            negative: to_set(negative)?,
            positive: to_set(positive)?,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.negative.is_empty() || self.positive.is_empty() {
            return Err(Error::Config("label scheme sets must be non-empty".into()));
        }
        if !self.negative.is_disjoint(&self.positive) {
            return Err(Error::Config("label scheme sets overlap".into()));
        }
        Ok(())
    }

    /// `Some(true)` for stressed, `Some(false)` for not stressed, `None` when
    /// the level is dropped by this scheme.
    pub fn map_label(&self, level: StressLevel) -> Option<bool> {
        if self.positive.contains(&level) {
            Some(true)
        } else if self.negative.contains(&level) {
            Some(false)
        } else {
            None
        }
    }
}

/// Row-major labeled feature matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n_features: usize,
    values: Vec<f64>,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn new(n_features: usize) -> Self {
        Self {
            n_features,
            values: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: &[bool]) -> Result<Self> {
        let n_features = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut ds = Self::new(n_features);
        if rows.len() != labels.len() {
            return Err(Error::InvalidInput("row and label counts differ".into()));
        }
        for (r, &y) in rows.iter().zip(labels) {
            ds.push(r.as_ref(), y)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, row: &[f64], label: bool) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::InvalidInput(format!(
                "row has {} features, dataset expects {}",
                row.len(),
                self.n_features
            )));
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if other.n_features != self.n_features {
            return Err(Error::InvalidInput("feature count mismatch".into()));
        }
        self.values.extend_from_slice(&other.values);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, feature: usize) -> f64 {
        self.values[i * self.n_features + feature]
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }
}

/// Recall on the positive class: `TP / (TP + FN)`.
pub fn recall(predicted: &[bool], actual: &[bool]) -> Result<f64> {
    let positives = actual.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric("recall needs at least one positive example".into()));
    }
    let tp = predicted.iter().zip(actual).filter(|(&p, &y)| p && y).count();
    Ok(tp as f64 / positives as f64)
}

/// Recall of `model` on the stressed class of `test`.
pub fn evaluate_recall(model: &ForestModel, test: &Dataset) -> Result<f64> {
    let predicted: Vec<bool> = (0..test.len()).map(|i| model.predict(test.row(i))).collect();
    recall(&predicted, test.labels())
}
