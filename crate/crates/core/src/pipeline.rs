//! Discrete-event model of the ingestion pipeline.
//!
//! Each user uploads a window on average once per `submission_interval_s`,
//! with exponential gaps. An upload passes a fixed-cost web server, waits in a
//! FIFO queue for one of the processing workers, and is then handed to the
//! storage workers. Storage workers only start a job while the processing
//! queue is empty when `storage_priority_lower` is on.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceDistribution {
    #[default]
    Exponential,
    Deterministic,
}

impl ServiceDistribution {
    fn draw<R: Rng>(self, mean: f64, rng: &mut R) -> f64 {
        match self {
            Self::Deterministic => mean,
            Self::Exponential => Exp::new(1.0 / mean).expect("positive mean").sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub n_users: usize,
    /// Mean gap between uploads of one user.
    pub submission_interval_s: f64,
    pub webserver_service_ms: f64,
    pub processing_service_ms: f64,
    pub storage_service_ms: f64,
    pub n_processing_workers: usize,
    pub n_storage_workers: usize,
    pub storage_priority_lower: bool,
    pub service_distribution: ServiceDistribution,
    pub sim_duration_s: f64,
    /// Uploads arriving in this leading fraction of the run are not measured.
    pub warmup_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_users: 100,
            submission_interval_s: 900.0,
            webserver_service_ms: 20.0,
            processing_service_ms: 3_600.0,
            storage_service_ms: 400.0,
            n_processing_workers: 2,
            n_storage_workers: 1,
            storage_priority_lower: true,
            service_distribution: ServiceDistribution::Exponential,
            sim_duration_s: 180_000.0,
            warmup_fraction: 0.1,
        }
    }
}

/// Uploads per user a run must cover.
pub const MIN_ARRIVALS_PER_USER: f64 = 100.0;

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("submission_interval_s", self.submission_interval_s),
            ("webserver_service_ms", self.webserver_service_ms),
            ("processing_service_ms", self.processing_service_ms),
            ("storage_service_ms", self.storage_service_ms),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_users == 0 || self.n_processing_workers == 0 || self.n_storage_workers == 0 {
            return Err(Error::Config("n_users and worker counts must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config("warmup_fraction must lie in [0, 1)".into()));
        }
        let needed = MIN_ARRIVALS_PER_USER * self.submission_interval_s;
        if !(self.sim_duration_s >= needed) {
            return Err(Error::Config(format!(
                "sim_duration_s {} covers fewer than {MIN_ARRIVALS_PER_USER} uploads per user; use at least {needed}",
                self.sim_duration_s
            )));
        }
        Ok(())
    }

    /// Uploads per second across all users.
    pub fn arrival_rate(&self) -> f64 {
        self.n_users as f64 / self.submission_interval_s
    }

    /// Offered load per processing worker.
    pub fn processing_utilization(&self) -> f64 {
        self.arrival_rate() * self.processing_service_ms / 1000.0 / self.n_processing_workers as f64
    }

    pub fn storage_utilization(&self) -> f64 {
        self.arrival_rate() * self.storage_service_ms / 1000.0 / self.n_storage_workers as f64
    }
}

/// Summary of one stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub count: usize,
}

impl StageStats {
    fn from_seconds(mut xs: Vec<f64>) -> Self {
        if xs.is_empty() {
            return Self::default();
        }
        xs.sort_by(f64::total_cmp);
        let pct = |q: f64| xs[((q * (xs.len() - 1) as f64).round() as usize).min(xs.len() - 1)] * 1000.0;
        Self {
            mean_ms: xs.iter().sum::<f64>() / xs.len() as f64 * 1000.0,
            p50_ms: pct(0.5),
            p95_ms: pct(0.95),
            count: xs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub n_users: usize,
    pub utilization: f64,
    /// Offered load reaches capacity at some stage; waits then grow with the
    /// run length and the means are not steady-state values.
    pub saturated: bool,
    pub arrivals: usize,
    pub departures: usize,
    pub in_system: usize,
    pub webserver: StageStats,
    pub processing_queue: StageStats,
    pub processing: StageStats,
    pub storage_queue: StageStats,
    /// Web server plus processing queue plus processing.
    pub end_to_end: StageStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Upload { user: usize },
    WebDone { job: usize },
    ProcessingDone { job: usize },
    StorageDone { job: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    id: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // min-heap on (time, id)
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.id.cmp(&self.id))
    }
}

#[derive(Debug, Clone, Copy)]
struct Job {
    arrival: f64,
    processing_service: f64,
    storage_service: f64,
    queued_processing: f64,
    started_processing: f64,
    finished_processing: f64,
    queued_storage: f64,
    started_storage: f64,
}

struct Sim<'a> {
    cfg: &'a PipelineConfig,
    events: BinaryHeap<Event>,
    next_id: u64,
    jobs: Vec<Job>,
    processing_queue: VecDeque<usize>,
    storage_queue: VecDeque<usize>,
    free_processing: usize,
    free_storage: usize,
    departures: usize,
}

impl Sim<'_> {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.events.push(Event {
            time,
            id: self.next_id,
            kind,
        });
        self.next_id += 1;
    }

    fn dispatch(&mut self, now: f64) {
        while self.free_processing > 0 {
            let Some(job) = self.processing_queue.pop_front() else { break };
            self.free_processing -= 1;
            self.jobs[job].started_processing = now;
            let done = now + self.jobs[job].processing_service;
            self.schedule(done, EventKind::ProcessingDone { job });
        }
        let storage_may_start = !self.cfg.storage_priority_lower || self.processing_queue.is_empty();
        while storage_may_start && self.free_storage > 0 {
            let Some(job) = self.storage_queue.pop_front() else { break };
            self.free_storage -= 1;
            self.jobs[job].started_storage = now;
            let done = now + self.jobs[job].storage_service;
            self.schedule(done, EventKind::StorageDone { job });
        }
    }
}

/// Runs the pipeline for `cfg.sim_duration_s` simulated seconds.
pub fn simulate(cfg: &PipelineConfig, seed: u64) -> Result<LatencyReport> {
    cfg.validate()?;
    let mut arrival_rng: SimRng = seed::rng(seed::derive_named(seed, "arrivals"));
    let mut service_rng: SimRng = seed::rng(seed::derive_named(seed, "service"));
    let gap = Exp::new(1.0 / cfg.submission_interval_s).map_err(|e| Error::Config(e.to_string()))?;
    let web = cfg.webserver_service_ms / 1000.0;
    let proc_mean = cfg.processing_service_ms / 1000.0;
    let store_mean = cfg.storage_service_ms / 1000.0;

    let mut sim = Sim {
        cfg,
        events: BinaryHeap::new(),
        next_id: 0,
        jobs: Vec::new(),
        processing_queue: VecDeque::new(),
        storage_queue: VecDeque::new(),
        free_processing: cfg.n_processing_workers,
        free_storage: cfg.n_storage_workers,
        departures: 0,
    };
    for user in 0..cfg.n_users {
        let t = gap.sample(&mut arrival_rng);
        sim.schedule(t, EventKind::Upload { user });
    }

    while let Some(ev) = sim.events.pop() {
        if ev.time > cfg.sim_duration_s {
            break;
        }
        let now = ev.time;
        match ev.kind {
            EventKind::Upload { user } => {
                let job = sim.jobs.len();
                sim.jobs.push(Job {
                    arrival: now,
                    processing_service: cfg.service_distribution.draw(proc_mean, &mut service_rng),
                    storage_service: cfg.service_distribution.draw(store_mean, &mut service_rng),
                    queued_processing: f64::NAN,
                    started_processing: f64::NAN,
                    finished_processing: f64::NAN,
                    queued_storage: f64::NAN,
                    started_storage: f64::NAN,
                });
                sim.schedule(now + web, EventKind::WebDone { job });
                let next = now + gap.sample(&mut arrival_rng);
                sim.schedule(next, EventKind::Upload { user });
            }
            EventKind::WebDone { job } => {
                sim.jobs[job].queued_processing = now;
                sim.processing_queue.push_back(job);
            }
            EventKind::ProcessingDone { job } => {
                sim.free_processing += 1;
                sim.jobs[job].finished_processing = now;
                sim.jobs[job].queued_storage = now;
                sim.storage_queue.push_back(job);
            }
            EventKind::StorageDone { .. } => {
                sim.free_storage += 1;
                sim.departures += 1;
            }
        }
        sim.dispatch(now);
    }

    let warmup = cfg.warmup_fraction * cfg.sim_duration_s;
    let measured = || sim.jobs.iter().filter(|j| j.arrival >= warmup);
    let processed: Vec<&Job> = measured().filter(|j| j.finished_processing.is_finite()).collect();
    let stage = |f: &dyn Fn(&Job) -> f64| StageStats::from_seconds(processed.iter().map(|j| f(j)).collect());
    let storage_queue = StageStats::from_seconds(
        measured()
            .filter(|j| j.started_storage.is_finite())
            .map(|j| j.started_storage - j.queued_storage)
            .collect(),
    );
    let utilization = cfg.processing_utilization().max(cfg.storage_utilization());
    Ok(LatencyReport {
        n_users: cfg.n_users,
        utilization,
        saturated: utilization >= 1.0,
        arrivals: sim.jobs.len(),
        departures: sim.departures,
        in_system: sim.jobs.len() - sim.departures,
        webserver: stage(&|j| j.queued_processing - j.arrival),
        processing_queue: stage(&|j| j.started_processing - j.queued_processing),
        processing: stage(&|j| j.finished_processing - j.started_processing),
        storage_queue,
        end_to_end: stage(&|j| j.finished_processing - j.arrival),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySweep {
    pub reports: Vec<LatencyReport>,
    /// First user count whose mean processing-queue wait exceeds the mean
    /// processing time.
    pub knee: Option<usize>,
}

/// Simulates every user count with the same seed.
pub fn latency_sweep(cfg: &PipelineConfig, user_counts: &[usize], seed: u64) -> Result<LatencySweep> {
    if user_counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("user counts must be sorted ascending".into()));
    }
    let reports = user_counts
        .par_iter()
        .map(|&n| simulate(&PipelineConfig { n_users: n, ..cfg.clone() }, seed))
        .collect::<Result<Vec<_>>>()?;
    let knee = reports
        .iter()
        .find(|r| r.processing_queue.mean_ms > cfg.processing_service_ms)
        .map(|r| r.n_users);
    Ok(LatencySweep { reports, knee })
}

impl LatencySweep {
    /// Columns `users,webserver_ms,proc_queue_ms,proc_ms,storage_queue_ms,end_to_end_ms,saturated`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "users",
            "webserver_ms",
            "proc_queue_ms",
            "proc_ms",
            "storage_queue_ms",
            "end_to_end_ms",
            "saturated",
        ])?;
        for r in &self.reports {
            w.write_record([
                r.n_users.to_string(),
                format!("{:.3}", r.webserver.mean_ms),
                format!("{:.3}", r.processing_queue.mean_ms),
                format!("{:.3}", r.processing.mean_ms),
                format!("{:.3}", r.storage_queue.mean_ms),
                format!("{:.3}", r.end_to_end.mean_ms),
                r.saturated.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_pop_in_time_then_id_order() {
        let mut h = BinaryHeap::new();
        for (time, id) in [(2.0, 0), (1.0, 2), (1.0, 1)] {
            h.push(Event {
                time,
                id,
                kind: EventKind::StorageDone { job: 0 },
            });
        }
        let order: Vec<u64> = std::iter::from_fn(|| h.pop()).map(|e| e.id).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn idle_system_has_no_queueing() {
        let r = simulate(&PipelineConfig { n_users: 1, ..Default::default() }, 3).unwrap();
        assert!(r.processing_queue.mean_ms < 1e-9);
        assert!((r.webserver.mean_ms - 20.0).abs() < 1e-6);
        assert!(!r.saturated);
    }

    #[test]
    fn conservation() {
        let r = simulate(&PipelineConfig { n_users: 300, ..Default::default() }, 9).unwrap();
        assert_eq!(r.arrivals, r.departures + r.in_system);
    }

    #[test]
    fn short_runs_rejected() {
        let cfg = PipelineConfig {
            sim_duration_s: 1_000.0,
            ..Default::default()
        };
        assert!(matches!(simulate(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn unsorted_sweep_rejected() {
        let err = latency_sweep(&PipelineConfig::default(), &[10, 5], 0);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
