mod common;

use caal::clock::SimTime;
use caal::dqn::bandit::TwoContextBandit;
use caal::dqn::{
    bellman_target, greedy_action, select_action, tabular_update, train_offline, BellmanMode, DqnConfig, QNetwork,
    ReplayBuffer, StepContext,
};
use caal::reward::RewardConfig;
use caal::state::{Action, AgentState, StateConfig};
use common::{bandit_optimum, bandit_run, gradient_check};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..10 {
        let worst = gradient_check(seed);
        assert!(worst < 1e-4, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn zero_network_is_zero() {
    let net = QNetwork::zeros(&[8, 8], 0.0, 0.0).unwrap();
    assert_eq!(net.q_values(&[0.3, 0.1, 0.9, 0.5]), [0.0, 0.0]);
}

#[test]
fn hand_set_single_unit() {
    // q = w_out * relu(w_in . s + b) + b_out
    let mut net = QNetwork::zeros(&[1], 0.0, 0.0).unwrap();
    for (i, w) in [1.0, -2.0, 0.5, 0.0].into_iter().enumerate() {
        net.set_weight(0, 0, i, w);
    }
    net.set_bias(0, 0, 0.1);
    net.set_weight(1, 0, 0, 3.0);
    net.set_weight(1, 1, 0, -1.0);
    net.set_bias(1, 1, 0.25);
    let s = [0.8, 0.1, 0.4, 0.9];
    let h = (0.8 - 0.2 + 0.2 + 0.1f64).max(0.0);
    let q = net.q_values(&s);
    assert!((q[0] - 3.0 * h).abs() < 1e-12);
    assert!((q[1] - (0.25 - h)).abs() < 1e-12);
    // Negative pre-activation shuts the unit off.
    assert_eq!(net.q_values(&[0.0, 1.0, 0.0, 0.0]), [0.0, 0.25]);
}

#[test]
fn greedy_and_forced_queries() {
    assert_eq!(greedy_action([0.2, 0.9]), Action::Query);
    assert_eq!(greedy_action([0.5, 0.5]), Action::Skip);

    let net = QNetwork::zeros(&[4], 0.0, 0.0).unwrap();
    let s = AgentState::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let all = (0..10_000).all(|_| select_action(&net, &s, 1.0, &mut rng) == Action::Query);
    assert!(all);
    let forced = (0..10_000).filter(|_| select_action(&net, &s, 0.05, &mut rng) == Action::Query).count();
    // Binomial(10000, 0.05): sd about 22.
    assert!((forced as i64 - 500).abs() < 110, "{forced}");
    assert!((0..100).all(|_| select_action(&net, &s, 0.0, &mut rng) == Action::Skip));
}

#[test]
fn bellman_arithmetic() {
    let cfg = DqnConfig {
        learning_rate: 0.1,
        discount: 0.9,
        ..Default::default()
    };
    let target = bellman_target(1.0, 0.0, 0.0, false, &cfg);
    assert!((tabular_update(0.0, target, 0.1) - 0.1).abs() < 1e-15);
    let literal = DqnConfig {
        bellman_mode: BellmanMode::Literal,
        ..cfg.clone()
    };
    assert!((bellman_target(1.0, 0.0, 0.0, false, &literal) - 0.9).abs() < 1e-15);
    let myopic = DqnConfig { discount: 0.0, ..cfg };
    assert_eq!(bellman_target(0.7, 5.0, 0.0, true, &myopic), 0.7);
}

#[test]
fn replay_is_fifo_and_bounded() {
    let mut buf = ReplayBuffer::new(3);
    for i in 0..7 {
        buf.push(i);
        assert!(buf.len() <= 3);
    }
    let mut held: Vec<i32> = buf.iter().copied().collect();
    held.sort();
    assert_eq!(held, vec![4, 5, 6]);
}

#[test]
fn bandit_oracle_queries_only_when_responsive() {
    assert_eq!(bandit_optimum(SimTime(0)), [Action::Skip, Action::Query]);
}

#[test]
fn bandit_policy_is_learned() {
    let wins = (0..3).filter(|&s| bandit_run(s, 6_000)).count();
    assert_eq!(wins, 3);
}

#[test]
fn null_reward_drives_q_to_zero() {
    let cfg = DqnConfig {
        train_steps: 6_000,
        hidden: vec![16, 16],
        target_sync_interval: 50,
        seed: 2,
        ..Default::default()
    };
    let net = cfg.init_network().unwrap();
    let mut env = TwoContextBandit::new(2, 50);
    let zero = |_: &AgentState, _: Action| 0.0;
    let (trained, _) = train_offline(&net, &mut env, &cfg, &zero, &StateConfig::default()).unwrap();
    for s in TwoContextBandit::states(SimTime(0)) {
        let q = trained.q_values(&s.as_array());
        assert!(q[0].abs() < 0.05 && q[1].abs() < 0.05, "{q:?}");
    }
}

#[test]
fn training_is_reproducible() {
    let cfg = DqnConfig {
        train_steps: 1_500,
        hidden: vec![8],
        seed: 7,
        ..Default::default()
    };
    let run = || {
        let mut env = TwoContextBandit::new(7, 40);
        train_offline(&cfg.init_network().unwrap(), &mut env, &cfg, &RewardConfig::default(), &StateConfig::default())
            .unwrap()
    };
    let (a, log_a) = run();
    let (b, log_b) = run();
    assert_eq!(a, b);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    log_a.write_csv(&mut x).unwrap();
    log_b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn cyclic_source_replays_episodes() {
    use caal::dqn::{CyclicEpisodes, EpisodeSource};
    let ctx = |k: i64| StepContext {
        raw_score: 0.4,
        timestamp: SimTime(k),
        response_rate: 0.5,
    };
    let mut src = CyclicEpisodes::new(vec![vec![ctx(0)], vec![ctx(1), ctx(2)]]);
    let lens: Vec<usize> = (0..4).map(|_| src.next_episode().len()).collect();
    assert_eq!(lens, vec![1, 2, 1, 2]);
}
