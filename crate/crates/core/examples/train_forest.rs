//! Pooled classifier on a synthetic population, evaluated on a held-out
//! subject before and after adding some of that subject's own labels.
//!
//!     cargo run --release --example train_forest

use caal::classifier::{evaluate_recall, Dataset, ForestConfig, ForestModel, LabelScheme};
use caal::hrv::FEATURE_COUNT;
use caal::subject::{generate_subject, step_stream, SubjectOverrides, SubjectProfile};

fn labeled(profile: &SubjectProfile, slots: usize, scheme: &LabelScheme) -> caal::Result<Dataset> {
    let mut data = Dataset::new(FEATURE_COUNT);
    for inst in step_stream(profile, slots)? {
        if let Some(y) = scheme.map_label(profile.report_level(inst.latent_intensity)) {
            data.push(&inst.features.to_array(), y)?;
        }
    }
    Ok(data)
}

fn main() -> caal::Result<()> {
    let scheme = LabelScheme::default();
    let mut pool = Dataset::new(FEATURE_COUNT);
    for seed in 0..10 {
        pool.extend(&labeled(&generate_subject(seed, &SubjectOverrides::default())?, 200, &scheme)?)?;
    }
    let held_out = generate_subject(
        100,
        &SubjectOverrides {
            stress_ibi_shift_ms: Some(-30.0),
            hrv_suppression: Some(0.85),
            target_minority_ratio: Some(0.15),
            ..Default::default()
        },
    )?;
    let own = labeled(&held_out, 3_000, &scheme)?;
    let (first, rest): (Vec<usize>, Vec<usize>) = (0..own.len()).partition(|&i| i < own.len() / 2);
    let pick = |idx: &[usize]| -> caal::Result<Dataset> {
        let mut d = Dataset::new(FEATURE_COUNT);
        for &i in idx {
            d.push(own.row(i), own.label(i))?;
        }
        Ok(d)
    };
    let test = pick(&rest)?;

    let cfg = ForestConfig {
        n_trees: 100,
        ..Default::default()
    };
    let pooled = ForestModel::train(&pool, &cfg)?;
    println!(
        "pool {} windows ({} stressed), test {} ({} stressed)",
        pool.len(),
        pool.positives(),
        test.len(),
        test.positives()
    );
    println!("pooled recall       {:.3}", evaluate_recall(&pooled, &test)?);

    let mut personal = pool.clone();
    personal.extend(&pick(&first)?)?;
    let tuned = ForestModel::train(&personal, &cfg)?;
    println!("with {} own labels {:.3}", first.len(), evaluate_recall(&tuned, &test)?);
    Ok(())
}
