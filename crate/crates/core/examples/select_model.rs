//! ICL model selection over a grid of (g, m) pairs.
//!
//! cargo run --release --example select_model

use lbm::{
    select_model, simulate_dataset, staircase_parameters, FitOptions, Grid, PriorHyperparams,
};

fn main() -> lbm::Result<()> {
    let params = staircase_parameters(3, 4, 0.1)?;
    let (data, _) = simulate_dataset(&params, 137, 33, 3)?;

    let grid = Grid::new(5, 5)?;
    let sel = select_model(
        &data,
        grid,
        &PriorHyperparams::default(),
        &FitOptions::default(),
        11,
    )?;

    print!("{:>4}", "g\\m");
    for m in 1..=grid.m_max {
        print!("{m:>10}");
    }
    println!();
    for g in 1..=grid.g_max {
        print!("{g:>4}");
        for m in 1..=grid.m_max {
            let cell = sel.cell(g, m).expect("cell in grid");
            print!("{:>10.1}", cell.icl_value);
        }
        println!();
    }
    let (g, m) = sel.best_pair;
    println!(
        "\nselected ({g}, {m}) with ICL {:.2}",
        sel.best_fit().icl_value
    );
    Ok(())
}
