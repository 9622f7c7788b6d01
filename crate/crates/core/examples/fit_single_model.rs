//! Fits one (g, m) model with several restarts and reports the estimated
//! parameters, the free-energy trace and how well the rows were recovered.
//!
//! cargo run --release --example fit_single_model

use lbm::{best_match, fit, simulate_dataset, staircase_parameters, FitOptions, PriorHyperparams};

fn main() -> lbm::Result<()> {
    let truth_params = staircase_parameters(3, 4, 0.15)?;
    let (data, truth) = simulate_dataset(&truth_params, 137, 33, 7)?;

    let opts = FitOptions::default().with_restarts(5);
    let f = fit(&data, 3, 4, &PriorHyperparams::default(), &opts, 1)?;

    println!("best chain: {} of {}", f.restart_index + 1, opts.restarts);
    println!("iterations: {}", f.iterations);
    println!("free energy: {:.4}", f.free_energy);
    println!("ICL: {:.4}", f.icl_value);
    println!("pi:  {:.3?}", f.params.pi);
    println!("rho: {:.3?}", f.params.rho);
    for row in f.params.alpha_rows() {
        println!("     {row:.3?}");
    }
    let first: Vec<String> = f.trace.iter().take(5).map(|x| format!("{x:.2}")).collect();
    println!("trace start: {}", first.join(" -> "));

    let m = best_match(&truth.z, &f.map_part.z, 3, 3)?;
    println!(
        "misclassified rows: {} ({:.1}%)",
        m.misclassified,
        100.0 * m.rate
    );
    Ok(())
}
