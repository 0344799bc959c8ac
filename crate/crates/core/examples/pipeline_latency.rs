//! Latency of the ingestion pipeline as the user count grows.
//!
//! Prints the stage means of the default configuration and where the
//! processing queue starts to dominate.
//!
//!     cargo run --release --example pipeline_latency

use caal::pipeline::{latency_sweep, PipelineConfig};

fn main() -> caal::Result<()> {
    let cfg = PipelineConfig::default();
    let users: Vec<usize> = (1..=12).map(|k| 50 * k).collect();
    let sweep = latency_sweep(&cfg, &users, 1)?;
    println!(
        "{:>6} {:>10} {:>14} {:>12} {:>14} {:>6}",
        "users", "web ms", "proc queue ms", "proc ms", "end-to-end ms", "util"
    );
    for r in &sweep.reports {
        println!(
            "{:>6} {:>10.1} {:>14.1} {:>12.1} {:>14.1} {:>6.2}{}",
            r.n_users,
            r.webserver.mean_ms,
            r.processing_queue.mean_ms,
            r.processing.mean_ms,
            r.end_to_end.mean_ms,
            r.utilization,
            if r.saturated { "  saturated" } else { "" }
        );
    }
    match sweep.knee {
        Some(k) => println!("queue wait first exceeds processing time at {k} users"),
        None => println!("no knee in the sweep"),
    }
    Ok(())
}
