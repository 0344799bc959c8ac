//! HRV features of a calm and a stressed window from one synthetic subject.
//!
//!     cargo run --release --example hrv_features

use caal::hrv::FEATURE_NAMES;
use caal::subject::{generate_subject, step_stream, SubjectOverrides};

fn main() -> caal::Result<()> {
    let profile = generate_subject(
        7,
        &SubjectOverrides {
            stress_ibi_shift_ms: Some(-70.0),
            hrv_suppression: Some(0.6),
            ..Default::default()
        },
    )?;
    let stream = step_stream(&profile, 400)?;
    let calm = stream.iter().find(|i| !i.latent_stressed).expect("a calm window");
    let stressed = stream.iter().find(|i| i.latent_stressed).expect("a stressed window");

    println!("{:>10} {:>12} {:>12}", "feature", "calm", "stressed");
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        println!(
            "{:>10} {:>12.3} {:>12.3}",
            name,
            calm.features.to_array()[k],
            stressed.features.to_array()[k]
        );
    }
    println!(
        "windows hold {} and {} beats",
        calm.nn_series.intervals.len(),
        stressed.nn_series.intervals.len()
    );
    Ok(())
}
