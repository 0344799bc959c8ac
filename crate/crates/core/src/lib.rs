//! Simulation workbench for context-aware active labeling.
//!
//! A synthetic subject emits a 2-minute NN-interval window every 15 minutes.
//! A pretrained tree ensemble scores each window; a deep Q-network decides
//! whether to ask the subject for a stress label, weighing classifier
//! uncertainty, time since the last query and the subject's learned hourly
//! response rate. Collected labels personalize the classifier.
//!
//! Modules, bottom-up:
//!
//! - [`hrv`]: HRV features from NN intervals
//! - [`classifier`]: Gini tree ensemble, label schemes, recall
//! - [`reward`]: sigmoid reward components and the query reward
//! - [`state`]: agent state vector and hourly response profile
//! - [`dqn`]: Q-network, replay buffer, offline training
//! - [`subject`]: synthetic subjects and their sensing streams
//! - [`experiment`]: the closed personalization loop and its reports
//! - [`pipeline`]: discrete-event model of the processing pipeline
//! - [`config`]: JSON configuration and run manifests
//! - [`cli`]: the `caal` command line

pub mod classifier;
pub mod cli;
pub mod clock;
pub mod config;
pub mod dqn;
pub mod error;
pub mod experiment;
pub mod hrv;
pub mod pipeline;
pub mod report;
pub mod reward;
pub mod seed;
pub mod state;
pub mod subject;

pub use error::{Error, Result};
