//! Fits a model to a CSV file, then writes the matrix reordered by group
//! together with a text block summary.
//!
//! cargo run --release --example reorder_export -- [data.csv] [g] [m]
//!
//! Without arguments a simulated matrix is used.

use std::env;

use lbm::io::{block_summary, export_reordered, load_matrix, write_matrix};
use lbm::{fit, simulate_dataset, staircase_parameters, FitOptions, PriorHyperparams};

fn main() -> lbm::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let out_dir = env::temp_dir().join("lbm_reorder_example");
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| lbm::LbmError::InvalidParameter(e.to_string()))?;

    let (data, g, m) = match args.as_slice() {
        [path, g, m] => {
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| lbm::LbmError::InvalidParameter(e.to_string()))
            };
            (load_matrix(path)?, parse(g)?, parse(m)?)
        }
        _ => {
            let params = staircase_parameters(3, 4, 0.1)?;
            let (data, _) = simulate_dataset(&params, 60, 20, 1)?;
            write_matrix(&data, out_dir.join("input.csv"))?;
            (data, 3, 4)
        }
    };

    let f = fit(
        &data,
        g,
        m,
        &PriorHyperparams::default(),
        &FitOptions::default().with_restarts(3),
        0,
    )?;
    let matrix = out_dir.join("reordered.csv");
    let summary = out_dir.join("summary.txt");
    export_reordered(&data, &f, &matrix, &summary)?;

    print!("{}", block_summary(&f.params));
    println!("\nwrote {} and {}", matrix.display(), summary.display());
    Ok(())
}
