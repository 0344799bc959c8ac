//! Random selection against the two query agents on one held-out subject.
//!
//! Builds the population, pretrains the classifier, trains both agents and
//! runs the budget-matched comparison, then prints the per-policy summary.
//!
//!     cargo run --release --example compare_policies -- [config.json]
//!
//! Without an argument the bundled `configs/quick.json` is used.

use std::path::PathBuf;
use std::time::Instant;

use caal::config::WorkbenchConfig;
use caal::experiment::{compare, recall_at_labels, Agents, PolicyKind, PolicySummary};

fn main() -> caal::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/quick.json"));
    let cfg = WorkbenchConfig::load(&path)?;
    let t0 = Instant::now();

    let scenario = cfg.prepare()?;
    let model = cfg.pretrain(&scenario)?;
    let test = &scenario.subject.test;
    println!(
        "pretraining pool {} windows ({} stressed); test tail {} windows ({} stressed)",
        scenario.pretrain_data.len(),
        scenario.pretrain_data.positives(),
        test.len(),
        test.positives()
    );
    let (context, _) = cfg.train_agent(&scenario, &model, true)?;
    let (noncontext, _) = cfg.train_agent(&scenario, &model, false)?;
    println!("setup took {:.1} s", t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let runs = compare(
        &cfg.experiment,
        cfg.loop_settings(),
        &scenario.subject,
        &scenario.pretrain_data,
        &model,
        Agents {
            context: Some(&context),
            noncontext: Some(&noncontext),
        },
        cfg.master_seed,
    )?;
    println!("comparison took {:.1} s", t1.elapsed().as_secs_f64());

    println!(
        "{:<14} {:>8} {:>9} {:>8} {:>8} {:>8} {:>14} {:>9}",
        "policy", "queries", "answered", "ratio", "recall0", "recallN", "to target", "censored"
    );
    for s in PolicySummary::from_runs(&runs, &cfg.experiment) {
        let q = &s.queries_to_target;
        println!(
            "{:<14} {:>8.1} {:>9.1} {:>8.3} {:>8.3} {:>8.3} {:>8} {:>2}/{:<3} {:>9.1}",
            s.policy.name(),
            s.mean_queries,
            s.mean_answered,
            s.response_ratio,
            s.mean_pretrained_recall,
            s.mean_final_recall,
            q.mean.map_or("-".into(), |m| format!("{m:.1}")),
            q.reached,
            q.reached + q.not_reached,
            q.censored_mean
        );
    }
    let at600: Vec<f64> = runs
        .iter()
        .filter(|r| r.policy == PolicyKind::AlContext)
        .filter_map(|r| recall_at_labels(r, 600))
        .collect();
    if !at600.is_empty() {
        println!(
            "al_context recall at 600 labels: {:.3} over {} runs",
            at600.iter().sum::<f64>() / at600.len() as f64,
            at600.len()
        );
    }
    Ok(())
}
