//! Selection on stratified row subsamples of accepted simulated data sets,
//! with misclassification rates against the full-data partition.
//!
//! cargo run --release --example robustness

use lbm::{robustness_experiment, RobustnessConfig};

fn main() -> lbm::Result<()> {
    let config = RobustnessConfig {
        epsilons: vec![0.15],
        datasets_per_eps: 3,
        sizes: vec![20, 60, 120],
        samples_per_size: 3,
        ..RobustnessConfig::default()
    };
    let report = robustness_experiment(&config, 4)?;
    for d in &report.datasets {
        println!(
            "data set {} accepted after {} rejections",
            d.dataset + 1,
            d.rejected
        );
    }
    for &n in &config.sizes {
        println!("n = {n}: {:?}", report.pair_distribution(0.15, n));
        for g_hat in 1..=config.grid.g_max {
            let rates = report.rates(0.15, n, g_hat);
            if !rates.is_empty() {
                println!("  g = {g_hat}: rates {rates:.3?}");
            }
        }
    }
    Ok(())
}
