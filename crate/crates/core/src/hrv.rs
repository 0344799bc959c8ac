//! Heart-rate-variability features computed from NN (inter-beat) intervals.
//!
//! All standard deviations are population deviations (divide by `n`). The
//! Poincaré descriptors are derived from SDNN and SDSD:
//! `SD1 = SDSD / sqrt(2)` and `SD2 = sqrt(max(0, 2 SDNN^2 - SDSD^2 / 2))`.
//!
//! Breathing rate is not estimated from the intervals. It is copied from the
//! series side channel when present and reported as 0 otherwise.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of intervals needed for feature extraction.
pub const MIN_INTERVALS: usize = 4;

/// Number of features in a [`FeatureVector`].
pub const FEATURE_COUNT: usize = 13;

/// Feature names in the fixed column order used by every CSV and by
/// [`FeatureVector::to_array`].
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "bpm", "ibi", "sdnn", "sdsd", "rmssd", "pnn20", "pnn50", "mad", "sd1", "sd2", "s_area",
    "sd_ratio", "br",
];

/// A window of NN intervals in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnSeries {
    pub intervals: Vec<f64>,
    pub window_seconds: f64,
    /// Breathing rate supplied by the generator, breaths/min.
    #[serde(default)]
    pub breathing_rate: Option<f64>,
}

impl NnSeries {
    pub fn new(intervals: Vec<f64>) -> Self {
        Self {
            intervals,
            window_seconds: 120.0,
            breathing_rate: None,
        }
    }

    pub fn with_breathing_rate(mut self, br: f64) -> Self {
        self.breathing_rate = Some(br);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals.len() < MIN_INTERVALS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_INTERVALS} NN intervals, got {}",
                self.intervals.len()
            )));
        }
        if let Some((i, x)) = self
            .intervals
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "NN interval #{i} is not a positive finite value ({x})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub bpm: f64,
    pub ibi: f64,
    pub sdnn: f64,
    pub sdsd: f64,
    pub rmssd: f64,
    pub pnn20: f64,
    pub pnn50: f64,
    pub mad: f64,
    pub sd1: f64,
    pub sd2: f64,
    pub s_area: f64,
    pub sd_ratio: f64,
    pub br: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.bpm,
            self.ibi,
            self.sdnn,
            self.sdsd,
            self.rmssd,
            self.pnn20,
            self.pnn50,
            self.mad,
            self.sd1,
            self.sd2,
            self.s_area,
            self.sd_ratio,
            self.br,
        ]
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_std(xs: &[f64], mean: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / xs.len() as f64).sqrt()
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Extracts the 13 HRV features from one window.
pub fn compute_features(series: &NnSeries) -> Result<FeatureVector> {
    series.validate()?;
    let nn = &series.intervals;

    let ibi = mean(nn);
    let sdnn = population_std(nn, ibi);

    let diffs: Vec<f64> = nn.windows(2).map(|w| w[1] - w[0]).collect();
    let diff_mean = mean(&diffs);
    let sdsd = population_std(&diffs, diff_mean);
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let frac_above = |k: f64| diffs.iter().filter(|d| d.abs() > k).count() as f64 / diffs.len() as f64;

    let mut sorted = nn.clone();
    let med = median(&mut sorted);
    let mut abs_dev: Vec<f64> = nn.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&mut abs_dev);

    let sd1 = FRAC_1_SQRT_2 * sdsd;
    let sd2 = (2.0 * sdnn * sdnn - 0.5 * sdsd * sdsd).max(0.0).sqrt();
    let sd_ratio = if sd2 > 0.0 { sd1 / sd2 } else { 0.0 };

    Ok(FeatureVector {
        bpm: 60_000.0 / ibi,
        ibi,
        sdnn,
        sdsd,
        rmssd,
        pnn20: frac_above(20.0),
        pnn50: frac_above(50.0),
        mad,
        sd1,
        sd2,
        s_area: PI * sd1 * sd2,
        sd_ratio,
        br: series.breathing_rate.unwrap_or(0.0),
    })
}

/// One input row of the batch CSV (`subject_id,timestamp,interval_ms`).
///
/// Consecutive rows sharing `(subject_id, timestamp)` form one window; the
/// timestamp is the window start in simulated seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub subject_id: String,
    pub timestamp: i64,
    pub interval_ms: f64,
}

/// One output row of the batch CSV. Column order is
/// `subject_id,timestamp,n_intervals,<FEATURE_NAMES...>,br_missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub timestamp: i64,
    pub n_intervals: usize,
    #[serde(flatten)]
    pub features: FeatureVector,
    pub br_missing: bool,
}

/// Header of the batch output CSV.
pub fn feature_csv_header() -> Vec<&'static str> {
    let mut h = vec!["subject_id", "timestamp", "n_intervals"];
    h.extend(FEATURE_NAMES);
    h.push("br_missing");
    h
}

/// Reads interval rows and writes one feature row per window. Lines
/// starting with `#` are skipped.
///
/// Windows carry no breathing-rate side channel here, so `br` is 0 and
/// `br_missing` is set on every row.
pub fn process_batch<R: Read, W: Write>(input: R, output: W) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut writer = csv::Writer::from_writer(output);
    writer.write_record(feature_csv_header())?;

    let mut current: Option<(String, i64)> = None;
    let mut buf: Vec<f64> = Vec::new();
    let mut windows = 0usize;

    let flush = |key: &(String, i64), buf: &mut Vec<f64>, writer: &mut csv::Writer<W>| -> Result<()> {
        let series = NnSeries::new(std::mem::take(buf));
        let n = series.intervals.len();
        let features = compute_features(&series).map_err(|e| {
            Error::InvalidInput(format!("window {}@{}: {e}", key.0, key.1))
        })?;
        write_feature_row(
            writer,
            &FeatureRow {
                subject_id: key.0.clone(),
                timestamp: key.1,
                n_intervals: n,
                features,
                br_missing: true,
            },
        )?;
        Ok(())
    };

    for row in reader.deserialize::<IntervalRow>() {
        let row = row?;
        let key = (row.subject_id, row.timestamp);
        if current.as_ref() != Some(&key) {
            if let Some(prev) = current.take() {
                flush(&prev, &mut buf, &mut writer)?;
                windows += 1;
            }
            current = Some(key);
        }
        buf.push(row.interval_ms);
    }
    if let Some(prev) = current.take() {
        flush(&prev, &mut buf, &mut writer)?;
        windows += 1;
    }
    writer.flush()?;
    Ok(windows)
}

fn write_feature_row<W: Write>(w: &mut csv::Writer<W>, row: &FeatureRow) -> Result<()> {
    let mut rec = vec![
        row.subject_id.clone(),
        row.timestamp.to_string(),
        row.n_intervals.to_string(),
    ];
    rec.extend(row.features.to_array().iter().map(|v| v.to_string()));
    rec.push(row.br_missing.to_string());
    w.write_record(rec)?;
    Ok(())
}
