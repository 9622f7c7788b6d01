//! Binary latent block model.
//!
//! Simulation from the staircase design, V-Bayes estimation with Gibbs
//! initialization and multiple restarts, exact ICL model selection over a
//! `(g, m)` grid, partition comparison under label switching and group
//! unions, and the restart-tuning, reference-model and robustness
//! experiment drivers.
//!
//! Group labels are 0-based inside the library and 1-based in every file
//! written by [`io`].

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod icl;
pub mod inference;
pub mod io;
pub mod model;
pub mod rng;
pub mod selection;

pub use error::{LbmError, Result};
pub use evaluation::{
    best_match, contingency, robustness_experiment, stratified_subsample, ContingencyTable,
    MatchResult, RobustnessConfig, RobustnessReport,
};
pub use icl::{icl, icl_from_counts};
pub use inference::{
    fit, free_energy, gibbs_init, vbayes_step, FitOptions, FitResult, VariationalState,
};
pub use model::{
    block_counts, simulate_dataset, staircase_parameters, BinaryDataMatrix, BlockCounts,
    CoPartition, LbmParameters, PriorHyperparams,
};
pub use selection::{
    reference_model_study, select_model, tune_restarts, Grid, ReferenceStudy, SelectionResult,
    TuningConfig, TuningRecord,
};
