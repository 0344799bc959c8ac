//! Samples a small population and summarizes each subject's stream: stressed
//! share, report histogram and mean heart rate by state.
//!
//!     cargo run --release --example generate_subjects -- [n_subjects]

use caal::subject::{generate_subject, step_stream, SubjectOverrides};

fn main() -> caal::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    println!(
        "{:>12} {:>7} {:>9} {:>24} {:>9} {:>9}",
        "subject", "target", "stressed", "levels 0..4", "bpm calm", "bpm str"
    );
    for seed in 0..n {
        let p = generate_subject(seed, &SubjectOverrides::default())?;
        let stream = step_stream(&p, 2_000)?;
        let mut hist = [0usize; 5];
        let (mut calm, mut stressed) = (Vec::new(), Vec::new());
        for inst in &stream {
            hist[p.report_level(inst.latent_intensity).value() as usize] += 1;
            if inst.latent_stressed { &mut stressed } else { &mut calm }.push(inst.features.bpm);
        }
        let mean = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
        println!(
            "{:>12} {:>7.3} {:>9.3} {:>24} {:>9.1} {:>9.1}",
            p.id,
            p.target_minority_ratio,
            stressed.len() as f64 / stream.len() as f64,
            format!("{hist:?}"),
            mean(&calm),
            mean(&stressed)
        );
    }
    Ok(())
}
