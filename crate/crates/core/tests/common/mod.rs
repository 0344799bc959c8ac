//! Oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use caal::dqn::{QNetwork, Sample};
use caal::hrv::FeatureVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-from-the-definition evaluation of every feature. Variances come
/// from pairwise squared differences and medians from order counting, so no
/// arithmetic is shared with the library.
pub fn feature_oracle(nn: &[f64]) -> FeatureVector {
    let n = nn.len();
    let pair_var = |xs: &[f64]| {
        let mut s = 0.0;
        for i in 0..xs.len() {
            for j in (i + 1)..xs.len() {
                s += (xs[i] - xs[j]).powi(2);
            }
        }
        s / (xs.len() * xs.len()) as f64
    };
    let median = |xs: &[f64]| {
        // k-th order statistic: the value with exactly k smaller entries
        // (ties handled by the <= count).
        let kth = |k: usize| {
            *xs.iter()
                .find(|&&v| {
                    let below = xs.iter().filter(|&&u| u < v).count();
                    let upto = xs.iter().filter(|&&u| u <= v).count();
                    below <= k && k < upto
                })
                .unwrap()
        };
        let m = xs.len();
        if m % 2 == 1 {
            kth(m / 2)
        } else {
            (kth(m / 2 - 1) + kth(m / 2)) / 2.0
        }
    };

    let ibi = nn.iter().sum::<f64>() / n as f64;
    let sdnn = pair_var(nn).sqrt();
    let d: Vec<f64> = (1..n).map(|i| nn[i] - nn[i - 1]).collect();
    let sdsd = pair_var(&d).sqrt();
    let rmssd = (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
    let over = |t: f64| d.iter().filter(|x| x.abs() > t).count() as f64 / d.len() as f64;
    let med = median(nn);
    let dev: Vec<f64> = nn.iter().map(|x| (x - med).abs()).collect();

    // Poincare plot rotated by 45 degrees: the minor axis spread is the
    // spread of (x[i+1] - x[i]) / sqrt(2); the major axis satisfies
    // SD1^2 + SD2^2 = 2 SDNN^2.
    let minor: Vec<f64> = d.iter().map(|x| x / 2f64.sqrt()).collect();
    let sd1 = pair_var(&minor).sqrt();
    let sd2 = (2.0 * sdnn * sdnn - sd1 * sd1).sqrt();
    FeatureVector {
        bpm: 60.0 * 1000.0 / ibi,
        ibi,
        sdnn,
        sdsd,
        rmssd,
        pnn20: over(20.0),
        pnn50: over(50.0),
        mad: median(&dev),
        sd1,
        sd2,
        s_area: std::f64::consts::PI * sd1 * sd2,
        sd_ratio: sd1 / sd2,
        br: 0.0,
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || (a == 0.0 && b == 0.0)
}

pub fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let base = rng.random_range(600.0..1100.0);
    let spread = rng.random_range(5.0..80.0);
    (0..n).map(|_| base + spread * (rng.random::<f64>() - 0.5) * 2.0).collect()
}


/// Worst relative disagreement between the analytic gradient and central
/// differences over every parameter of a random small network.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=6)).collect();
    let (l1, l2) = (rng.random_range(0.0..1e-2), rng.random_range(0.0..1e-2));
    let mut net = QNetwork::random(&hidden, l1, l2, &mut rng).unwrap();
    // Nonzero biases keep ReLU units active on a mix of inputs.
    for p in net.params_mut() {
        if *p == 0.0 {
            *p = rng.random_range(-0.3..0.3);
        }
    }
    let batch: Vec<Sample> = (0..rng.random_range(1..=8))
        .map(|_| Sample {
            state: [0; 4].map(|_| rng.random::<f64>()),
            action: if rng.random::<bool>() { caal::state::Action::Query } else { caal::state::Action::Skip },
            target: rng.random_range(-2.0..2.0),
        })
        .collect();

    let (_, grad) = net.loss_and_gradient(&batch);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..net.param_count() {
        let x = net.params()[k];
        net.params_mut()[k] = x + h;
        let up = net.loss(&batch);
        net.params_mut()[k] = x - h;
        let down = net.loss(&batch);
        net.params_mut()[k] = x;
        let numeric = (up - down) / (2.0 * h);
        let scale = grad[k].abs().max(numeric.abs());
        if scale > 1e-7 {
            worst = worst.max((grad[k] - numeric).abs() / scale);
        }
    }
    worst
}

/// Optimal deterministic policy of the two-context bandit, found by
/// enumerating all four `(low-rate action, high-rate action)` pairs and
/// scoring each by its exact expected one-step reward. States are equally
/// likely and actions do not move the state, so this is also the
/// discounted optimum.
pub fn bandit_optimum(at: caal::clock::SimTime) -> [caal::state::Action; 2] {
    use caal::dqn::bandit::TwoContextBandit;
    use caal::reward::{reward, RewardConfig};
    use caal::state::Action;
    let cfg = RewardConfig::default();
    let [low, high] = TwoContextBandit::states(at);
    let actions = [Action::Skip, Action::Query];
    let mut best = ([Action::Skip; 2], f64::MIN);
    for a in actions {
        for b in actions {
            let v = 0.5 * reward(&low, a, &cfg) + 0.5 * reward(&high, b, &cfg);
            if v > best.1 {
                best = ([a, b], v);
            }
        }
    }
    best.0
}

/// Hours of day the bandit episodes visit.
pub const BANDIT_HOURS: [i64; 6] = [0, 4, 8, 12, 16, 20];

/// Trains on the bandit and reports whether the greedy policy matches the
/// enumerated optimum at every visited hour.
pub fn bandit_run(seed: u64, steps: usize) -> bool {
    use caal::clock::SimTime;
    use caal::dqn::bandit::TwoContextBandit;
    use caal::dqn::{train_offline, DqnConfig};
    use caal::reward::RewardConfig;
    use caal::state::StateConfig;
    let cfg = DqnConfig {
        train_steps: steps,
        hidden: vec![16, 16],
        target_sync_interval: 200,
        seed,
        ..Default::default()
    };
    let net = cfg.init_network().unwrap();
    let mut env = TwoContextBandit::new(seed, 50);
    let (trained, _) = train_offline(&net, &mut env, &cfg, &RewardConfig::default(), &StateConfig::default()).unwrap();
    BANDIT_HOURS.iter().all(|&h| {
        let at = SimTime::from_hm(0, h, 0);
        TwoContextBandit::greedy_policy(&trained, at) == bandit_optimum(at)
    })
}

/// Mean M/M/c queue wait in seconds from the Erlang-C formula.
pub fn erlang_c_wait(lambda: f64, mu: f64, c: usize) -> f64 {
    let a = lambda / mu;
    let rho = a / c as f64;
    assert!(rho < 1.0);
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..c {
        if k > 0 {
            term *= a / k as f64;
        }
        sum += term;
    }
    let top = term * a / c as f64 / (1.0 - rho);
    let p_wait = top / (sum + top);
    p_wait / (c as f64 * mu - lambda)
}
