//! Personalization of the pretrained classifier on one held-out subject under
//! the context-aware agent, reported as recall against collected labels.
//!
//!     cargo run --release --example personalize -- [config.json]
//!
//! Without an argument the bundled `configs/personalize.json` is used.

use std::path::PathBuf;

use rayon::prelude::*;

use caal::config::WorkbenchConfig;
use caal::experiment::{mean_trajectory, recall_at_labels, repeat_seed, run_policy, PolicyKind};

fn main() -> caal::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/personalize.json"));
    let mut cfg = WorkbenchConfig::load(&path)?;
    cfg.experiment.policy = PolicyKind::AlContext;

    let scenario = cfg.prepare()?;
    let model = cfg.pretrain(&scenario)?;
    let (agent, _) = cfg.train_agent(&scenario, &model, true)?;
    let runs = (0..cfg.experiment.repeats)
        .into_par_iter()
        .map(|r| {
            run_policy(
                &cfg.experiment,
                cfg.loop_settings(),
                &scenario.subject,
                &scenario.pretrain_data,
                &model,
                Some(&agent),
                r,
                repeat_seed(cfg.master_seed, r),
            )
        })
        .collect::<caal::Result<Vec<_>>>()?;

    let mean = mean_trajectory(&runs);
    println!("{:>6} {:>8} {:>7} {:>7}", "block", "queries", "labels", "recall");
    let step = (mean.len() / 15).max(1);
    for p in mean.iter().step_by(step) {
        println!("{:>6} {:>8} {:>7} {:>7.3}", p.block, p.queries, p.labels, p.recall);
    }
    let pretrained = runs.iter().map(|r| r.pretrained_recall()).sum::<f64>() / runs.len() as f64;
    for target in [150, 300, 450, 600] {
        let at: Vec<f64> = runs.iter().filter_map(|r| recall_at_labels(r, target)).collect();
        if at.is_empty() {
            println!("{target} labels: not reached");
        } else {
            let m = at.iter().sum::<f64>() / at.len() as f64;
            println!("{target} labels: recall {m:.3} ({:+.3}) over {} runs", m - pretrained, at.len());
        }
    }
    Ok(())
}
