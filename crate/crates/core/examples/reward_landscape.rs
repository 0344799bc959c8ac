//! Query reward over classifier score and hourly response rate, with the
//! time since the last query saturated.
//!
//!     cargo run --release --example reward_landscape

use caal::reward::{reward, RewardConfig};
use caal::state::{Action, AgentState};

fn main() {
    let cfg = RewardConfig::default();
    let rates = [0.1, 0.3, 0.4, 0.5, 0.7, 0.9];
    print!("{:>6}", "score");
    for r in rates {
        print!(" {:>7}", format!("r={r}"));
    }
    println!();
    for k in 0..=10 {
        let s1 = k as f64 / 10.0;
        print!("{s1:>6.1}");
        for s3 in rates {
            let s = AgentState { s1, s2: 1.0, s3, s4: 0.5 };
            print!(" {:>7.3}", reward(&s, Action::Query, &cfg));
        }
        println!();
    }
    println!("skip reward is 1 - query/2 everywhere");
}
