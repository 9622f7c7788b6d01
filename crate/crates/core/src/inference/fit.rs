use rayon::prelude::*;

use super::{free_energy, gibbs_init, vbayes_step, VariationalState};
use crate::error::{LbmError, Result};
use crate::icl::icl;
use crate::model::{BinaryDataMatrix, CoPartition, LbmParameters, PriorHyperparams};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Independent Gibbs + V-Bayes chains; the best free energy wins.
    pub restarts: usize,
    pub gibbs_sweeps: usize,
    pub max_iter: usize,
    /// Relative free-energy change below which a chain has converged.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 1,
            gibbs_sweeps: 50,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

impl FitOptions {
    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iter == 0 || self.gibbs_sweeps == 0 {
            return Err(LbmError::InvalidParameter(
                "restarts, max_iter and gibbs_sweeps must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(LbmError::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub g: usize,
    pub m: usize,
    pub params: LbmParameters,
    pub state: VariationalState,
    pub map_part: CoPartition,
    pub free_energy: f64,
    pub icl_value: f64,
    pub iterations: usize,
    pub restart_index: usize,
    /// Free energy at the Gibbs starting point, then after every V-Bayes step.
    pub trace: Vec<f64>,
}

/// Seed of restart chain `restart` under the fit seed `seed`.
pub fn chain_seed(seed: u64, restart: usize) -> u64 {
    derive_seed(seed, &[restart as u64])
}

/// Runs a single Gibbs-initialized V-Bayes chain to convergence.
pub fn fit_chain(
    data: &BinaryDataMatrix,
    g: usize,
    m: usize,
    prior: &PriorHyperparams,
    opts: &FitOptions,
    seed: u64,
    restart_index: usize,
) -> Result<FitResult> {
    let (mut params, part) = gibbs_init(data, g, m, prior, opts.gibbs_sweeps, seed)?;
    let mut state = VariationalState::from_partition(&part);
    let mut energy = free_energy(data, &state, &params, prior)?;
    let mut trace = vec![energy];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (s, p) = vbayes_step(data, &state, &params, prior).map_err(|e| match e {
            LbmError::NumericalFailure { message, .. } => LbmError::NumericalFailure {
                iteration: iterations,
                message,
            },
            other => other,
        })?;
        let next = free_energy(data, &s, &p, prior).map_err(|_| LbmError::NumericalFailure {
            iteration: iterations,
            message: "non-finite free energy".into(),
        })?;
        state = s;
        params = p;
        let delta = (next - energy).abs();
        energy = next;
        trace.push(energy);
        if delta < opts.tol * energy.abs() {
            break;
        }
    }
    let map_part = state.map_partition();
    let icl_value = icl(data, &map_part, g, m, prior)?;
    Ok(FitResult {
        g,
        m,
        params,
        state,
        map_part,
        free_energy: energy,
        icl_value,
        iterations,
        restart_index,
        trace,
    })
}

/// Fits the `(g, m)` model with `opts.restarts` independent chains and keeps
/// the chain of maximal free energy (the first one on ties).
///
/// Chain `r` is seeded with [`chain_seed`]`(seed, r)`, so the result does not
/// depend on how chains are scheduled across threads.
pub fn fit(
    data: &BinaryDataMatrix,
    g: usize,
    m: usize,
    prior: &PriorHyperparams,
    opts: &FitOptions,
    seed: u64,
) -> Result<FitResult> {
    opts.validate()?;
    prior.validate()?;
    if g == 0 || m == 0 {
        return Err(LbmError::InvalidParameter(
            "group counts must be at least 1".into(),
        ));
    }
    let chains: Vec<Result<FitResult>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| fit_chain(data, g, m, prior, opts, chain_seed(seed, r), r))
        .collect();

    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for chain in chains {
        match chain {
            Ok(c) => {
                if best.as_ref().is_none_or(|b| c.free_energy > b.free_energy) {
                    best = Some(c);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| LbmError::AllChainsFailed {
        restarts: opts.restarts,
        first: Box::new(first_err.expect("at least one chain ran")),
    })
}
