use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::classifier::{Dataset, ForestConfig, ForestModel, LabelScheme};
use crate::dqn::{self, CyclicEpisodes, DqnConfig, QNetwork, StepContext, TrainingLog};
use crate::error::{Error, Result};
use crate::hrv::FEATURE_COUNT;
use crate::reward::RewardConfig;
use crate::seed;
use crate::state::StateConfig;
use crate::subject::{generate_subject, step_stream, Instance, SubjectOverrides, SubjectProfile};

/// The held-out subject. A given `overrides` object replaces the default
/// overrides as a whole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectSpec {
    /// Profile seed; derived from the master seed when absent.
    pub seed: Option<u64>,
    pub overrides: SubjectOverrides,
}

impl Default for SubjectSpec {
    /// A muted stress responder at the edge of the population ranges, with a
    /// 15% stressed-report share: the pooled classifier under-detects its
    /// stress until it has seen the subject's own labels.
    fn default() -> Self {
        Self {
            seed: None,
            overrides: SubjectOverrides {
                stress_ibi_shift_ms: Some(-30.0),
                hrv_suppression: Some(0.85),
                target_minority_ratio: Some(0.15),
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_pretrain_subjects: usize,
    pub pretrain_slots_per_subject: usize,
    /// Labeled windows contributed by each population subject.
    pub pretrain_labels_per_subject: usize,
    /// Offline agent episodes are population streams cut to this length.
    pub agent_episode_slots: usize,
    pub held_out: SubjectSpec,
    pub stream_length_slots: usize,
    pub label_scheme: LabelScheme,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_pretrain_subjects: 14,
            pretrain_slots_per_subject: 2_000,
            pretrain_labels_per_subject: 150,
            agent_episode_slots: 672,
            held_out: SubjectSpec::default(),
            stream_length_slots: 8_000,
            label_scheme: LabelScheme::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pretrain_subjects == 0 {
            return Err(Error::Config("n_pretrain_subjects must be >= 1".into()));
        }
        if self.pretrain_labels_per_subject == 0 || self.pretrain_labels_per_subject > self.pretrain_slots_per_subject {
            return Err(Error::Config(
                "pretrain_labels_per_subject must lie in 1..=pretrain_slots_per_subject".into(),
            ));
        }
        if self.agent_episode_slots < 2 {
            return Err(Error::Config("agent_episode_slots must be >= 2".into()));
        }
        self.label_scheme.validate()
    }

    pub fn population_profiles(&self, master_seed: u64) -> Result<Vec<SubjectProfile>> {
        (0..self.n_pretrain_subjects)
            .map(|i| {
                let s = seed::derive(seed::derive_named(master_seed, "population"), i as u64);
                generate_subject(
                    s,
                    &SubjectOverrides {
                        id: Some(format!("pop-{i:02}")),
                        ..Default::default()
                    },
                )
            })
            .collect()
    }

    pub fn held_out_profile(&self, master_seed: u64) -> Result<SubjectProfile> {
        let s = self
            .held_out
            .seed
            .unwrap_or_else(|| seed::derive_named(master_seed, "held-out"));
        let mut overrides = self.held_out.overrides.clone();
        overrides.id.get_or_insert_with(|| "held-out".to_string());
        generate_subject(s, &overrides)
    }
}

/// The held-out subject's stream split into a training prefix and a test tail.
#[derive(Debug, Clone)]
pub struct SubjectData {
    pub profile: SubjectProfile,
    pub instances: Vec<Instance>,
    /// Instances `train_end..` form the test tail.
    pub train_end: usize,
    pub test: Dataset,
}

impl SubjectData {
    pub fn new(profile: SubjectProfile, n_slots: usize, holdout_fraction: f64, scheme: &LabelScheme) -> Result<Self> {
        let instances = step_stream(&profile, n_slots)?;
        let n_test = ((n_slots as f64) * holdout_fraction).round() as usize;
        let train_end = n_slots.saturating_sub(n_test);
        let mut test = Dataset::new(FEATURE_COUNT);
        for inst in &instances[train_end..] {
            if let Some(y) = scheme.map_label(profile.report_level(inst.latent_intensity)) {
                test.push(&inst.features.to_array(), y)?;
            }
        }
        if test.positives() == 0 {
            return Err(Error::Config(format!(
                "test tail of subject {} holds no stressed reports; lengthen the stream",
                profile.id
            )));
        }
        Ok(Self {
            profile,
            instances,
            train_end,
            test,
        })
    }

    pub fn features(&self, i: usize) -> [f64; FEATURE_COUNT] {
        self.instances[i].features.to_array()
    }
}

/// Everything a run needs before any policy acts.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub population: Vec<SubjectProfile>,
    pub population_streams: Vec<Vec<Instance>>,
    /// Pooled labeled windows of the population.
    pub pretrain_data: Dataset,
    pub subject: SubjectData,
}

impl PreparedScenario {
    pub fn build(cfg: &ScenarioConfig, holdout_fraction: f64, master_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let population = cfg.population_profiles(master_seed)?;
        let held_out = cfg.held_out_profile(master_seed)?;
        let population_streams = population
            .iter()
            .map(|p| step_stream(p, cfg.pretrain_slots_per_subject))
            .collect::<Result<Vec<_>>>()?;
        let pretrain_data = pretraining_data(
            &population,
            &population_streams,
            cfg.pretrain_labels_per_subject,
            &cfg.label_scheme,
            seed::derive_named(master_seed, "pretrain-labels"),
        )?;
        let subject = SubjectData::new(held_out, cfg.stream_length_slots, holdout_fraction, &cfg.label_scheme)?;
        Ok(Self {
            population,
            population_streams,
            pretrain_data,
            subject,
        })
    }
}

/// Labels `labels_per_subject` uniformly chosen windows of every population
/// stream with that subject's own report, mapped through `scheme`.
pub fn pretraining_data(
    population: &[SubjectProfile],
    streams: &[Vec<Instance>],
    labels_per_subject: usize,
    scheme: &LabelScheme,
    seed: u64,
) -> Result<Dataset> {
    let mut data = Dataset::new(FEATURE_COUNT);
    for (k, (profile, stream)) in population.iter().zip(streams).enumerate() {
        let mut rng = seed::rng(seed::derive(seed, k as u64));
        let mut picks = index::sample(&mut rng, stream.len(), labels_per_subject.min(stream.len())).into_vec();
        picks.sort_unstable();
        for i in picks {
            let inst = &stream[i];
            if let Some(y) = scheme.map_label(profile.report_level(inst.latent_intensity)) {
                data.push(&inst.features.to_array(), y)?;
            }
        }
    }
    Ok(data)
}

/// Leave-subject-out pretraining on the pooled population labels.
pub fn pretrain(
    population: &[SubjectProfile],
    population_data: &Dataset,
    held_out: &SubjectProfile,
    forest: &ForestConfig,
) -> Result<ForestModel> {
    if population.is_empty() || population_data.is_empty() {
        return Err(Error::Config("pretraining population is empty".into()));
    }
    if population.iter().any(|p| p.id == held_out.id || p == held_out) {
        return Err(Error::Config(format!(
            "held-out subject {} is part of the pretraining population",
            held_out.id
        )));
    }
    ForestModel::train(population_data, forest)
}

/// Offline agent episodes: population streams scored by `model`, with each
/// subject's true hourly responsiveness standing in for the learned rate.
pub fn agent_episodes(
    population: &[SubjectProfile],
    streams: &[Vec<Instance>],
    model: &ForestModel,
    episode_slots: usize,
) -> Vec<Vec<StepContext>> {
    let mut episodes = Vec::new();
    for (profile, stream) in population.iter().zip(streams) {
        let contexts: Vec<StepContext> = stream
            .iter()
            .map(|inst| StepContext {
                raw_score: model.predict_raw(&inst.features.to_array()),
                timestamp: inst.timestamp,
                response_rate: profile.responsiveness[inst.timestamp.hour()],
            })
            .collect();
        episodes.extend(contexts.chunks(episode_slots.max(2)).filter(|c| c.len() >= 2).map(<[_]>::to_vec));
    }
    episodes
}

/// Trains the contextual agent, or with `contextual = false` the agent whose
/// reward depends on the classifier score alone.
pub fn train_agent(
    scenario: &PreparedScenario,
    model: &ForestModel,
    episode_slots: usize,
    dqn_cfg: &DqnConfig,
    reward: &RewardConfig,
    state: &StateConfig,
    contextual: bool,
) -> Result<(QNetwork, TrainingLog)> {
    reward.validate()?;
    let episodes = agent_episodes(&scenario.population, &scenario.population_streams, model, episode_slots);
    if episodes.is_empty() {
        return Err(Error::Config("no agent training episodes".into()));
    }
    let reward = RewardConfig {
        uncertainty_only: !contextual,
        ..reward.clone()
    };
    let cfg = DqnConfig {
        seed: seed::derive_named(dqn_cfg.seed, if contextual { "context" } else { "noncontext" }),
        ..dqn_cfg.clone()
    };
    let net = cfg.init_network()?;
    dqn::train_offline(&net, &mut CyclicEpisodes::new(episodes), &cfg, &reward, state)
}
