//! Repeats single-restart selection, takes the pair of the run with the
//! highest ICL as reference and summarizes the gaps between its occurrences.
//!
//! cargo run --release --example reference_model

use lbm::{
    reference_model_study, simulate_dataset, staircase_parameters, FitOptions, Grid,
    PriorHyperparams,
};

fn main() -> lbm::Result<()> {
    let params = staircase_parameters(3, 4, 0.3)?;
    let (data, _) = simulate_dataset(&params, 137, 33, 6)?;

    let study = reference_model_study(
        &data,
        Grid::new(6, 6)?,
        &PriorHyperparams::default(),
        &FitOptions::default(),
        30,
        9,
    )?;
    println!("selected pairs: {:?}", study.pair_counts());
    println!(
        "reference {:?} from run {}, hit rate {:.2}",
        study.reference_pair,
        study.reference_run,
        study.hit_rate()
    );
    println!("occurrences: {:?}", study.occurrence_indices);
    println!("inter-arrivals: {:?}", study.inter_arrivals);
    if let Some(s) = study.inter_arrival_summary {
        println!(
            "min {} | q1 {} | median {} | mean {:.2} | q3 {} | max {}",
            s.min, s.q1, s.median, s.mean, s.q3, s.max
        );
    }
    Ok(())
}
