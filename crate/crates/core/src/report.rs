//! CSV outputs of experiment runs. Every file starts with one `#` comment
//! line naming the tool version and master seed; read them back with
//! `csv::ReaderBuilder::comment(Some(b'#'))`.

use std::io::Write;

use crate::config::VERSION;
use crate::error::Result;
use crate::experiment::{PolicySummary, RunResult};
use crate::state::HOURS;

pub fn stamp(master_seed: u64) -> String {
    format!("# caal v{VERSION} master_seed={master_seed}")
}

fn stamped<W: Write>(mut out: W, master_seed: u64) -> Result<csv::Writer<W>> {
    writeln!(out, "{}", stamp(master_seed))?;
    Ok(csv::Writer::from_writer(out))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// One row per run.
pub fn write_results<W: Write>(out: W, master_seed: u64, runs: &[RunResult], gain: f64, window: usize) -> Result<()> {
    let mut w = stamped(out, master_seed)?;
    w.write_record([
        "policy",
        "repeat",
        "seed",
        "queries",
        "answered",
        "labels",
        "response_ratio",
        "pretrained_recall",
        "final_recall",
        "queries_to_target",
    ])?;
    for r in runs {
        w.write_record([
            r.policy.to_string(),
            r.repeat.to_string(),
            r.seed.to_string(),
            r.queries_issued.to_string(),
            r.answered.to_string(),
            r.labels_obtained.to_string(),
            opt(r.answer_ratio()),
            format!("{:.6}", r.pretrained_recall()),
            format!("{:.6}", r.final_recall()),
            crate::experiment::queries_to_target(r, gain, window)
                .map(|q| q.to_string())
                .unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per policy.
pub fn write_summary<W: Write>(out: W, master_seed: u64, summaries: &[PolicySummary]) -> Result<()> {
    let mut w = stamped(out, master_seed)?;
    w.write_record([
        "policy",
        "runs",
        "mean_queries",
        "mean_answered",
        "mean_labels",
        "response_ratio",
        "mean_pretrained_recall",
        "mean_final_recall",
        "qtt_reached",
        "qtt_not_reached",
        "qtt_mean",
        "qtt_std",
        "qtt_censored_mean",
    ])?;
    for s in summaries {
        let q = &s.queries_to_target;
        w.write_record([
            s.policy.to_string(),
            s.runs.to_string(),
            format!("{:.3}", s.mean_queries),
            format!("{:.3}", s.mean_answered),
            format!("{:.3}", s.mean_labels),
            format!("{:.6}", s.response_ratio),
            format!("{:.6}", s.mean_pretrained_recall),
            format!("{:.6}", s.mean_final_recall),
            q.reached.to_string(),
            q.not_reached.to_string(),
            opt(q.mean),
            opt(q.std),
            format!("{:.3}", q.censored_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Recall against queries and labels, one row per run and block.
pub fn write_trajectory<W: Write>(out: W, master_seed: u64, runs: &[RunResult]) -> Result<()> {
    let mut w = stamped(out, master_seed)?;
    w.write_record(["policy", "repeat", "block", "queries", "answered", "labels", "recall"])?;
    for r in runs {
        for p in &r.trajectory {
            w.write_record([
                r.policy.to_string(),
                r.repeat.to_string(),
                p.block.to_string(),
                p.queries.to_string(),
                p.answered.to_string(),
                p.labels.to_string(),
                format!("{:.6}", p.recall),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cumulative response ratio per block, then the learned hourly profile at
/// the end of each run (`block` empty, `hour` set).
pub fn write_response_rates<W: Write>(out: W, master_seed: u64, runs: &[RunResult]) -> Result<()> {
    let mut w = stamped(out, master_seed)?;
    w.write_record(["policy", "repeat", "block", "hour", "issued", "answered", "rate"])?;
    for r in runs {
        for (block, ratio) in r.response_rate_series.iter().enumerate() {
            let p = &r.trajectory[block];
            w.write_record([
                r.policy.to_string(),
                r.repeat.to_string(),
                block.to_string(),
                String::new(),
                p.queries.to_string(),
                p.answered.to_string(),
                opt(*ratio),
            ])?;
        }
        for h in 0..HOURS {
            w.write_record([
                r.policy.to_string(),
                r.repeat.to_string(),
                String::new(),
                h.to_string(),
                r.profile.issued[h].to_string(),
                r.profile.answered[h].to_string(),
                format!("{:.6}", r.profile.rate[h]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamp_is_a_comment_line_readers_skip() {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, 42, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# caal v"));
        assert!(text.lines().next().unwrap().ends_with("master_seed=42"));
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        assert_eq!(rdr.headers().unwrap().get(0), Some("policy"));
    }
}
