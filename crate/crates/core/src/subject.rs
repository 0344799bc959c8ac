//! Synthetic subjects.
//!
//! Each subject has a two-state latent stress chain over 15-minute slots,
//! NN-interval physiology that shifts under stress, subject-specific
//! thresholds turning latent intensity into a five-level self-report, and an
//! hourly probability of answering a query.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::classifier::StressLevel;
use crate::clock::{SimTime, SLOT_SECONDS};
use crate::error::{Error, Result};
use crate::hrv::{compute_features, FeatureVector, NnSeries};
use crate::seed::{self, SimRng};
use crate::state::HOURS;

/// Bounds of the default population's stressed-report ratio.
pub const MINORITY_RATIO_RANGE: (f64, f64) = (0.025, 0.208);

const WINDOW_MS: f64 = 120_000.0;
const MIN_INTERVAL_MS: f64 = 250.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectProfile {
    pub id: String,
    pub seed: u64,
    /// Resting mean NN interval.
    pub baseline_ibi_ms: f64,
    /// Beat-to-beat standard deviation at rest.
    pub beat_std_ms: f64,
    /// Slot-to-slot standard deviation of the window mean.
    pub slot_wander_ms: f64,
    /// Peak night-time lengthening of the NN interval (peaks at 03:00).
    pub circadian_amplitude_ms: f64,
    /// Added to the mean NN interval while stressed (negative).
    pub stress_ibi_shift_ms: f64,
    /// Multiplier on beat-to-beat variability while stressed.
    pub hrv_suppression: f64,
    /// Lag-one autocorrelation of successive intervals.
    pub interval_autocorrelation: f64,
    /// `[[calm->calm, calm->stressed], [stressed->calm, stressed->stressed]]`.
    pub stress_transition: [[f64; 2]; 2],
    /// Multiplier on the calm->stressed probability per hour of day.
    pub hourly_stress_modifier: [f64; HOURS],
    /// Probability of answering a query per hour of day.
    pub responsiveness: [f64; HOURS],
    /// Latent intensity cut points for levels 1..=4.
    pub report_thresholds: [f64; 4],
    /// Expected fraction of reports at level 3 or above.
    pub target_minority_ratio: f64,
    pub calm_intensity: f64,
    pub stressed_intensity: f64,
    pub intensity_noise: f64,
    pub breathing_rate: f64,
    pub stress_breathing_shift: f64,
    pub start_stressed: bool,
}

/// Optional replacements for sampled profile fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectOverrides {
    pub id: Option<String>,
    pub baseline_ibi_ms: Option<f64>,
    pub beat_std_ms: Option<f64>,
    pub slot_wander_ms: Option<f64>,
    pub circadian_amplitude_ms: Option<f64>,
    pub stress_ibi_shift_ms: Option<f64>,
    pub hrv_suppression: Option<f64>,
    pub interval_autocorrelation: Option<f64>,
    pub stress_transition: Option<[[f64; 2]; 2]>,
    pub hourly_stress_modifier: Option<[f64; HOURS]>,
    pub responsiveness: Option<[f64; HOURS]>,
    pub report_thresholds: Option<[f64; 4]>,
    pub target_minority_ratio: Option<f64>,
    pub intensity_noise: Option<f64>,
    pub breathing_rate: Option<f64>,
    pub stress_breathing_shift: Option<f64>,
    pub start_stressed: Option<bool>,
}

impl SubjectProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("subject {}: {m}", self.id)));
        for (i, row) in self.stress_transition.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-9 {
                return bad(format!("transition row {i} must be a probability vector"));
            }
        }
        if self.responsiveness.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("responsiveness must lie in [0, 1]".into());
        }
        if self.hourly_stress_modifier.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return bad("hourly stress modifiers must be >= 0".into());
        }
        if self.report_thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("report thresholds must be strictly increasing".into());
        }
        if !(self.baseline_ibi_ms > MIN_INTERVAL_MS) || !(self.beat_std_ms >= 0.0) || !(self.slot_wander_ms >= 0.0) {
            return bad("baseline interval must exceed 250 ms and deviations must be >= 0".into());
        }
        if !(self.hrv_suppression > 0.0 && self.hrv_suppression <= 1.0) {
            return bad("hrv_suppression must lie in (0, 1]".into());
        }
        if self.stress_ibi_shift_ms > 0.0 {
            return bad("stress_ibi_shift_ms must be <= 0".into());
        }
        if !(0.0..1.0).contains(&self.interval_autocorrelation) {
            return bad("interval_autocorrelation must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.target_minority_ratio) || !(self.intensity_noise >= 0.0) {
            return bad("target_minority_ratio must lie in [0, 1] and intensity_noise >= 0".into());
        }
        Ok(())
    }

    /// Five-level report for a latent intensity.
    pub fn report_level(&self, intensity: f64) -> StressLevel {
        let level = self.report_thresholds.iter().filter(|&&c| intensity >= c).count();
        StressLevel::new(level as u8).expect("at most four thresholds")
    }

    /// Calm->stressed probability at an hour of day.
    pub fn entry_probability(&self, hour: usize) -> f64 {
        (self.stress_transition[0][1] * self.hourly_stress_modifier[hour]).clamp(0.0, 1.0)
    }

    /// Stationary stressed fraction of the unmodulated chain.
    pub fn stationary_stressed_fraction(&self) -> f64 {
        let p01 = self.stress_transition[0][1];
        let p10 = self.stress_transition[1][0];
        if p01 + p10 == 0.0 {
            return if self.start_stressed { 1.0 } else { 0.0 };
        }
        p01 / (p01 + p10)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Default responsiveness shape: low overnight, moderate through working
/// hours, high in the evening.
fn responsiveness_shape(low: f64, mid: f64, high: f64, shift: i64) -> [f64; HOURS] {
    let mut r = [0.0; HOURS];
    for (h, v) in r.iter_mut().enumerate() {
        let local = (h as i64 - shift).rem_euclid(HOURS as i64);
        *v = match local {
            0..=6 => low,
            7..=8 | 23 => 0.5 * (low + mid),
            9..=16 => mid,
            _ => high,
        };
    }
    r
}

fn default_stress_modifier() -> [f64; HOURS] {
    let mut m = [0.0; HOURS];
    for (h, v) in m.iter_mut().enumerate() {
        *v = match h {
            0..=6 => 0.3,
            9..=17 => 1.4,
            _ => 1.0,
        };
    }
    let mean = m.iter().sum::<f64>() / HOURS as f64;
    m.iter_mut().for_each(|v| *v /= mean);
    m
}

/// Chooses the calm->stressed probability so the expected share of
/// level >= 3 reports equals `ratio`.
fn entry_probability_for_ratio(
    ratio: f64,
    exit: f64,
    calm: f64,
    stressed: f64,
    noise: f64,
    cut: f64,
) -> f64 {
    let above = |mean: f64| {
        if noise == 0.0 {
            return if mean >= cut { 1.0 } else { 0.0 };
        }
        let n = NormalDist::new(mean, noise).expect("positive noise");
        1.0 - n.cdf(cut)
    };
    let (a, b) = (above(stressed), above(calm));
    let pi = if a > b { ((ratio - b) / (a - b)).clamp(0.005, 0.95) } else { ratio };
    (pi * exit / (1.0 - pi)).clamp(0.0, 1.0)
}

/// Samples a subject from the default population and applies `overrides`.
pub fn generate_subject(seed: u64, overrides: &SubjectOverrides) -> Result<SubjectProfile> {
    let mut rng = seed::rng(seed::derive_named(seed, "subject-profile"));
    let mut u = |lo: f64, hi: f64| rng.sample(Uniform::new(lo, hi).expect("lo < hi"));

    let calm_intensity = 0.3;
    let stressed_intensity = 0.75;
    let intensity_noise = overrides.intensity_noise.unwrap_or(0.1);

    let cut = u(0.5, 0.6);
    let report_thresholds = [cut * u(0.2, 0.35), cut * u(0.55, 0.75), cut, cut + u(0.15, 0.22)];
    let report_thresholds = overrides.report_thresholds.unwrap_or(report_thresholds);

    let ratio = u(MINORITY_RATIO_RANGE.0, MINORITY_RATIO_RANGE.1);
    let target_minority_ratio = overrides.target_minority_ratio.unwrap_or(ratio);
    let exit = u(0.2, 0.4);
    let entry = entry_probability_for_ratio(
        target_minority_ratio,
        exit,
        calm_intensity,
        stressed_intensity,
        intensity_noise,
        report_thresholds[2],
    );
    let transition = [[1.0 - entry, entry], [exit, 1.0 - exit]];

    let (low, mid, high) = (u(0.05, 0.2), u(0.3, 0.6), u(0.65, 0.95));
    let shift = u(-2.49, 2.49).round() as i64;

    let profile = SubjectProfile {
        id: overrides.id.clone().unwrap_or_else(|| format!("subject-{seed}")),
        seed,
        baseline_ibi_ms: overrides.baseline_ibi_ms.unwrap_or(u(720.0, 920.0)),
        beat_std_ms: overrides.beat_std_ms.unwrap_or(u(25.0, 55.0)),
        slot_wander_ms: overrides.slot_wander_ms.unwrap_or(u(15.0, 30.0)),
        circadian_amplitude_ms: overrides.circadian_amplitude_ms.unwrap_or(u(30.0, 70.0)),
        stress_ibi_shift_ms: overrides.stress_ibi_shift_ms.unwrap_or(u(-80.0, -30.0)),
        hrv_suppression: overrides.hrv_suppression.unwrap_or(u(0.6, 0.85)),
        interval_autocorrelation: overrides.interval_autocorrelation.unwrap_or(0.3),
        stress_transition: overrides.stress_transition.unwrap_or(transition),
        hourly_stress_modifier: overrides.hourly_stress_modifier.unwrap_or_else(default_stress_modifier),
        responsiveness: overrides
            .responsiveness
            .unwrap_or_else(|| responsiveness_shape(low, mid, high, shift)),
        report_thresholds,
        target_minority_ratio,
        calm_intensity,
        stressed_intensity,
        intensity_noise,
        breathing_rate: overrides.breathing_rate.unwrap_or(u(12.0, 17.0)),
        stress_breathing_shift: overrides.stress_breathing_shift.unwrap_or(u(1.0, 3.0)),
        start_stressed: overrides.start_stressed.unwrap_or(false),
    };
    profile.validate()?;
    Ok(profile)
}

/// One 2-minute sensing window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub subject_id: String,
    /// Position in the subject's stream.
    pub index: usize,
    pub timestamp: SimTime,
    pub nn_series: NnSeries,
    pub features: FeatureVector,
    pub latent_stressed: bool,
    pub latent_intensity: f64,
    pub collected_label: Option<StressLevel>,
}

/// Generates `n_slots` consecutive windows, one every 15 minutes from time 0.
/// The stream depends only on the profile (including its seed) and `n_slots`.
pub fn step_stream(profile: &SubjectProfile, n_slots: usize) -> Result<Vec<Instance>> {
    profile.validate()?;
    let mut rng = seed::rng(seed::derive_named(profile.seed, "subject-stream"));
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let rho = profile.interval_autocorrelation;
    let innovation = (1.0 - rho * rho).sqrt();

    let mut stressed = profile.start_stressed;
    let mut out = Vec::with_capacity(n_slots);
    for k in 0..n_slots {
        let timestamp = SimTime(k as i64 * SLOT_SECONDS);
        let hour = timestamp.hour();
        if k > 0 {
            let p = if stressed {
                profile.stress_transition[1][1]
            } else {
                profile.entry_probability(hour)
            };
            stressed = rng.random::<f64>() < p;
        }

        let intensity_mean = if stressed { profile.stressed_intensity } else { profile.calm_intensity };
        let latent_intensity =
            (intensity_mean + profile.intensity_noise * std_normal.sample(&mut rng)).clamp(0.0, 1.0);

        let circadian = profile.circadian_amplitude_ms * (2.0 * PI * (timestamp.hour_fraction() - 3.0) / 24.0).cos();
        let window_mean = profile.baseline_ibi_ms
            + circadian
            + profile.slot_wander_ms * std_normal.sample(&mut rng)
            + if stressed { profile.stress_ibi_shift_ms } else { 0.0 };
        let beat_std = profile.beat_std_ms * if stressed { profile.hrv_suppression } else { 1.0 };

        let mut intervals = Vec::with_capacity(200);
        let mut elapsed = 0.0;
        let mut e = beat_std * std_normal.sample(&mut rng);
        while elapsed < WINDOW_MS {
            let x = (window_mean + e).max(MIN_INTERVAL_MS);
            intervals.push(x);
            elapsed += x;
            e = rho * e + innovation * beat_std * std_normal.sample(&mut rng);
        }
        let br = profile.breathing_rate
            + if stressed { profile.stress_breathing_shift } else { 0.0 }
            + 0.8 * std_normal.sample(&mut rng);
        let nn_series = NnSeries::new(intervals).with_breathing_rate(br.max(1.0));
        let features = compute_features(&nn_series)?;

        out.push(Instance {
            subject_id: profile.id.clone(),
            index: k,
            timestamp,
            nn_series,
            features,
            latent_stressed: stressed,
            latent_intensity,
            collected_label: None,
        });
    }
    Ok(out)
}

/// Whether the subject answers a query issued at `query_time`, and if so the
/// reported level.
pub fn respond<R: Rng + ?Sized>(
    profile: &SubjectProfile,
    instance: &Instance,
    query_time: SimTime,
    rng: &mut R,
) -> Option<StressLevel> {
    let p = profile.responsiveness[query_time.hour()];
    (rng.random::<f64>() < p).then(|| profile.report_level(instance.latent_intensity))
}

/// Writes the interval stream in the `subject_id,timestamp,interval_ms`
/// batch schema.
pub fn write_stream_csv<W: Write>(instances: &[Instance], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "timestamp", "interval_ms"])?;
    for inst in instances {
        let ts = inst.timestamp.seconds().to_string();
        for x in &inst.nn_series.intervals {
            w.write_record([inst.subject_id.as_str(), ts.as_str(), x.to_string().as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes per-window latent truth for audit:
/// `subject_id,index,timestamp,latent_stressed,latent_intensity,report_level,breathing_rate`.
pub fn write_truth_csv<W: Write>(profile: &SubjectProfile, instances: &[Instance], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "subject_id",
        "index",
        "timestamp",
        "latent_stressed",
        "latent_intensity",
        "report_level",
        "breathing_rate",
    ])?;
    for inst in instances {
        w.write_record([
            inst.subject_id.clone(),
            inst.index.to_string(),
            inst.timestamp.seconds().to_string(),
            inst.latent_stressed.to_string(),
            inst.latent_intensity.to_string(),
            profile.report_level(inst.latent_intensity).value().to_string(),
            inst.features.br.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Draws a fresh uniform RNG for response simulation.
pub fn response_rng(seed: u64) -> SimRng {
    seed::rng(seed::derive_named(seed, "responses"))
}
