//! How many restarts per grid cell are needed before the simulated pair is
//! selected, for an easy and a hard block structure.
//!
//! cargo run --release --example tune_restarts

use lbm::{tune_restarts, Grid, TuningConfig};

fn main() -> lbm::Result<()> {
    let config = TuningConfig {
        epsilons: vec![0.05, 0.2, 0.25],
        datasets_per_eps: 5,
        n: 100,
        q: 30,
        grid: Grid::new(5, 5)?,
        t_cap: 8,
        ..TuningConfig::default()
    };
    for rec in tune_restarts(&config, 2)? {
        let ts: Vec<String> = rec
            .stops
            .iter()
            .map(|s| {
                if s.censored {
                    format!(">{}", s.t)
                } else {
                    s.t.to_string()
                }
            })
            .collect();
        println!(
            "epsilon {:.2}: T = [{}], distribution {:?}, censored {}",
            rec.epsilon,
            ts.join(", "),
            rec.distribution(),
            rec.censored()
        );
    }
    Ok(())
}
