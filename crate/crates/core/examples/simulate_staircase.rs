//! Simulates a staircase data set and prints it with rows and columns sorted
//! by their true groups.
//!
//! cargo run --example simulate_staircase

use lbm::io::order_by_group;
use lbm::{simulate_dataset, staircase_parameters};

fn main() -> lbm::Result<()> {
    let params = staircase_parameters(3, 4, 0.1)?;
    let (data, truth) = simulate_dataset(&params, 24, 16, 42)?;

    println!("alpha:");
    for row in params.alpha_rows() {
        println!("  {row:?}");
    }
    println!(
        "{} ones out of {} cells\n",
        data.ones(),
        data.n() * data.q()
    );

    let rows = order_by_group(&truth.z);
    let cols = order_by_group(&truth.w);
    for &i in &rows {
        let line: String = cols
            .iter()
            .map(|&j| if data.get(i, j) == 1 { '#' } else { '.' })
            .collect();
        println!("z={} {line}", truth.z[i] + 1);
    }
    Ok(())
}
