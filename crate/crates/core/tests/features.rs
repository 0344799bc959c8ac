mod common;

use caal::hrv::{compute_features, process_batch, NnSeries, FEATURE_NAMES};
use common::{close, feature_oracle, random_series};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_series_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let nn = random_series(&mut rng, 200);
        let got = compute_features(&NnSeries::new(nn.clone())).unwrap().to_array();
        let want = feature_oracle(&nn).to_array();
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            assert!(close(got[k], want[k], 1e-9), "{name}: {} vs {}", got[k], want[k]);
        }
    }
}

#[test]
fn constant_series_is_flat() {
    let f = compute_features(&NnSeries::new(vec![1000.0; 120])).unwrap();
    assert_eq!(f.bpm, 60.0);
    assert_eq!(f.ibi, 1000.0);
    for v in [f.sdnn, f.sdsd, f.rmssd, f.pnn20, f.pnn50, f.mad, f.sd1, f.sd2, f.s_area] {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn successive_difference_counts() {
    let f = compute_features(&NnSeries::new(vec![1000.0, 1030.0, 1040.0, 1045.0])).unwrap();
    assert!((f.pnn20 - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(f.pnn50, 0.0);
}

#[test]
fn shift_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let nn = random_series(&mut rng, 150);
        let c = rng.random_range(-200.0..200.0);
        let a = compute_features(&NnSeries::new(nn.clone())).unwrap();
        let b = compute_features(&NnSeries::new(nn.iter().map(|x| x + c).collect())).unwrap();
        for (x, y) in [
            (a.sdnn, b.sdnn),
            (a.sdsd, b.sdsd),
            (a.rmssd, b.rmssd),
            (a.mad, b.mad),
            (a.sd1, b.sd1),
            (a.sd2, b.sd2),
        ] {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
        assert!((b.ibi - a.ibi - c).abs() < 1e-9);
    }
}

#[test]
fn ranges_and_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.random_range(4..300);
        let nn = random_series(&mut rng, n);
        let f = compute_features(&NnSeries::new(nn)).unwrap();
        assert!(f.sdnn >= 0.0 && f.rmssd >= 0.0);
        assert!((0.0..=1.0).contains(&f.pnn20) && (0.0..=1.0).contains(&f.pnn50));
        assert!(f.pnn50 <= f.pnn20);
        assert_eq!(f.s_area, std::f64::consts::PI * f.sd1 * f.sd2);
        assert!(close(f.bpm, 60_000.0 / f.ibi, 1e-9));
    }
}

#[test]
fn short_and_invalid_series_rejected() {
    assert!(compute_features(&NnSeries::new(vec![800.0; 3])).is_err());
    assert!(compute_features(&NnSeries::new(vec![800.0, 810.0, -1.0, 790.0])).is_err());
    assert!(compute_features(&NnSeries::new(vec![800.0, f64::NAN, 800.0, 790.0])).is_err());
}

#[test]
fn breathing_rate_side_channel() {
    let s = NnSeries::new(vec![800.0, 810.0, 790.0, 805.0]);
    assert_eq!(compute_features(&s).unwrap().br, 0.0);
    assert_eq!(compute_features(&s.with_breathing_rate(14.5)).unwrap().br, 14.5);
}

#[test]
fn batch_groups_windows() {
    let mut input = String::from("# comment\nsubject_id,timestamp,interval_ms\n");
    for ts in [0, 900] {
        for k in 0..6 {
            input.push_str(&format!("s1,{ts},{}\n", 800 + 10 * k));
        }
    }
    let mut out = Vec::new();
    assert_eq!(process_batch(input.as_bytes(), &mut out).unwrap(), 2);
    let text = String::from_utf8(out).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "subject_id");
    assert_eq!(headers.iter().last(), Some("br_missing"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][1], "900");
    assert_eq!(&rows[0][2], "6");
}
