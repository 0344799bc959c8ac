//! Trains the query agent on the two-context bandit and prints its learned
//! Q-values: it should query only when the response rate is high.
//!
//!     cargo run --release --example bandit_agent

use caal::clock::SimTime;
use caal::dqn::bandit::{TwoContextBandit, HIGH_RATE, LOW_RATE};
use caal::dqn::{train_offline, DqnConfig};
use caal::reward::RewardConfig;
use caal::state::StateConfig;

fn main() -> caal::Result<()> {
    let cfg = DqnConfig {
        train_steps: 20_000,
        hidden: vec![32, 32],
        ..Default::default()
    };
    let mut env = TwoContextBandit::new(cfg.seed, 50);
    let (net, log) = train_offline(
        &cfg.init_network()?,
        &mut env,
        &cfg,
        &RewardConfig::default(),
        &StateConfig::default(),
    )?;

    let rewards = log.episode_rewards();
    let chunk = (rewards.len() / 8).max(1);
    println!("mean episode reward by training phase:");
    for (i, c) in rewards.chunks(chunk).enumerate() {
        println!("  {:>2}: {:.2}", i, c.iter().sum::<f64>() / c.len() as f64);
    }
    let at = SimTime(0);
    for (rate, s) in [LOW_RATE, HIGH_RATE].iter().zip(TwoContextBandit::states(at)) {
        let q = net.q_values(&s.as_array());
        println!("rate {rate}: Q(skip) {:.3}  Q(query) {:.3}", q[0], q[1]);
    }
    println!("greedy policy: {:?}", TwoContextBandit::greedy_policy(&net, at));
    Ok(())
}
