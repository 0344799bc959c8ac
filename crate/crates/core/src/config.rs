//! Top-level JSON configuration and run manifests.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{ForestConfig, ForestModel};
use crate::dqn::{DqnConfig, QNetwork, TrainingLog};
use crate::error::{Error, Result};
use crate::experiment::{self, ExperimentConfig, LoopSettings, PreparedScenario, ScenarioConfig};
use crate::pipeline::PipelineConfig;
use crate::reward::RewardConfig;
use crate::seed;
use crate::state::StateConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every tunable of a run. Seeds inside the sections are stream offsets; the
/// seed actually used is derived from `master_seed` and that offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub master_seed: u64,
    pub scenario: ScenarioConfig,
    pub classifier: ForestConfig,
    pub reward: RewardConfig,
    pub state: StateConfig,
    pub agent: DqnConfig,
    pub experiment: ExperimentConfig,
    pub pipeline: PipelineConfig,
    /// User counts of `pipeline-sim`.
    pub sweep_users: Vec<usize>,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            scenario: ScenarioConfig::default(),
            classifier: ForestConfig::default(),
            reward: RewardConfig::default(),
            state: StateConfig::default(),
            agent: DqnConfig::default(),
            experiment: ExperimentConfig::default(),
            pipeline: PipelineConfig::default(),
            sweep_users: (1..=12).map(|k| 50 * k).collect(),
        }
    }
}

impl WorkbenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.classifier.validate()?;
        self.reward.validate()?;
        self.state.validate()?;
        self.agent.validate()?;
        self.experiment.validate()?;
        self.pipeline.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        Ok(())
    }

    /// Forest settings with the derived seed.
    pub fn forest(&self) -> ForestConfig {
        ForestConfig {
            seed: seed::derive(seed::derive_named(self.master_seed, "forest"), self.classifier.seed),
            ..self.classifier.clone()
        }
    }

    /// Agent settings with the derived seed.
    pub fn dqn(&self) -> DqnConfig {
        DqnConfig {
            seed: seed::derive(seed::derive_named(self.master_seed, "agent"), self.agent.seed),
            ..self.agent.clone()
        }
    }

    /// Builds the population, the held-out subject and the pretraining pool.
    pub fn prepare(&self) -> Result<PreparedScenario> {
        PreparedScenario::build(&self.scenario, self.experiment.test_holdout_fraction, self.master_seed)
    }

    pub fn pretrain(&self, scenario: &PreparedScenario) -> Result<ForestModel> {
        experiment::pretrain(
            &scenario.population,
            &scenario.pretrain_data,
            &scenario.subject.profile,
            &self.forest(),
        )
    }

    pub fn train_agent(
        &self,
        scenario: &PreparedScenario,
        pretrained: &ForestModel,
        contextual: bool,
    ) -> Result<(QNetwork, TrainingLog)> {
        experiment::train_agent(
            scenario,
            pretrained,
            self.scenario.agent_episode_slots,
            &self.dqn(),
            &self.reward,
            &self.state,
            contextual,
        )
    }

    pub fn loop_settings(&self) -> LoopSettings<'_> {
        LoopSettings {
            forest: &self.classifier,
            state: &self.state,
            label_scheme: &self.scenario.label_scheme,
            exploration: self.experiment.exploration,
        }
    }
}

/// Written into every run directory; re-running from it reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Extra positional settings of the command, such as the policy of `run`.
    pub arguments: Vec<String>,
    pub master_seed: u64,
    pub config: WorkbenchConfig,
    /// Files of the run directory, relative to it.
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn new(command: &str, arguments: Vec<String>, config: &WorkbenchConfig, outputs: &[&str]) -> Self {
        Self {
            tool: "caal".into(),
            version: VERSION.into(),
            command: command.into(),
            arguments,
            master_seed: config.master_seed,
            config: config.clone(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(&mut w, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
        let m: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if m.tool != "caal" {
            return Err(Error::Config(format!("{} is not a caal manifest", path.display())));
        }
        if m.master_seed != m.config.master_seed {
            return Err(Error::Config("manifest seed disagrees with its config".into()));
        }
        m.config.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = WorkbenchConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(WorkbenchConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = WorkbenchConfig::from_json(r#"{"master_seed": 1, "agnet": {}}"#).unwrap_err();
        assert!(err.to_string().contains("agnet"), "{err}");
        let err = WorkbenchConfig::from_json(r#"{"agent": {"epsilon_decay": 0.9}}"#).unwrap_err();
        assert!(err.to_string().contains("epsilon_decay"), "{err}");
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = WorkbenchConfig::from_json(r#"{"master_seed": 7, "experiment": {"repeats": 3}}"#).unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.experiment.repeats, 3);
        assert_eq!(cfg.experiment.update_cadence, 100);
    }

    #[test]
    fn derived_seeds_follow_master() {
        let a = WorkbenchConfig::default();
        let b = WorkbenchConfig {
            master_seed: 1,
            ..Default::default()
        };
        assert_ne!(a.forest().seed, b.forest().seed);
        assert_ne!(a.dqn().seed, a.forest().seed);
    }
}
