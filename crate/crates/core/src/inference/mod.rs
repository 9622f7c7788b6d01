//! V-Bayes estimation with Gibbs-sampler initialization.
//!
//! A single chain draws a starting co-partition and parameters with a short
//! Gibbs run, then iterates V-Bayes updates until the free energy settles.
//! [`fit`] runs several chains and keeps the one with the highest free energy.

mod fit;
mod gibbs;
mod vbayes;

pub use fit::{chain_seed, fit, fit_chain, FitOptions, FitResult};
pub use gibbs::gibbs_init;
pub use vbayes::{free_energy, vbayes_step};

use crate::error::{LbmError, Result};
use crate::model::{BinaryDataMatrix, CoPartition};

/// Values below this are lifted before taking logarithms of probabilities.
pub(crate) const LOG_CLAMP: f64 = 1e-12;

#[inline]
pub(crate) fn ln_prob(p: f64) -> f64 {
    p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP).ln()
}

#[inline]
pub(crate) fn ln_weight(p: f64) -> f64 {
    p.max(LOG_CLAMP).ln()
}

/// Row responsibilities `tau` (`n x g`) and column responsibilities `nu` (`q x m`), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub n: usize,
    pub q: usize,
    pub g: usize,
    pub m: usize,
    pub tau: Vec<f64>,
    pub nu: Vec<f64>,
}

impl VariationalState {
    pub fn new(
        n: usize,
        g: usize,
        tau: Vec<f64>,
        q: usize,
        m: usize,
        nu: Vec<f64>,
    ) -> Result<Self> {
        let state = Self {
            n,
            q,
            g,
            m,
            tau,
            nu,
        };
        state.validate(1e-10)?;
        Ok(state)
    }

    /// One-hot responsibilities of a hard co-partition.
    pub fn from_partition(part: &CoPartition) -> Self {
        let (n, q, g, m) = (part.z.len(), part.w.len(), part.g, part.m);
        let mut tau = vec![0.0; n * g];
        for (i, &k) in part.z.iter().enumerate() {
            tau[i * g + k] = 1.0;
        }
        let mut nu = vec![0.0; q * m];
        for (j, &l) in part.w.iter().enumerate() {
            nu[j * m + l] = 1.0;
        }
        Self {
            n,
            q,
            g,
            m,
            tau,
            nu,
        }
    }

    #[inline]
    pub fn tau_row(&self, i: usize) -> &[f64] {
        &self.tau[i * self.g..(i + 1) * self.g]
    }

    #[inline]
    pub fn nu_row(&self, j: usize) -> &[f64] {
        &self.nu[j * self.m..(j + 1) * self.m]
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        check_stochastic("tau", &self.tau, self.n, self.g, tol)?;
        check_stochastic("nu", &self.nu, self.q, self.m, tol)
    }

    pub(crate) fn check_dims(&self, data: &BinaryDataMatrix) -> Result<()> {
        if self.n != data.n() || self.q != data.q() {
            return Err(LbmError::DimensionMismatch(format!(
                "state covers {}x{} but data is {}x{}",
                self.n,
                self.q,
                data.n(),
                data.q()
            )));
        }
        Ok(())
    }

    /// Maximum a posteriori co-partition.
    pub fn map_partition(&self) -> CoPartition {
        CoPartition {
            z: argmax_rows(&self.tau, self.g),
            w: argmax_rows(&self.nu, self.m),
            g: self.g,
            m: self.m,
        }
    }
}

fn check_stochastic(name: &str, v: &[f64], rows: usize, cols: usize, tol: f64) -> Result<()> {
    if v.len() != rows * cols {
        return Err(LbmError::DimensionMismatch(format!(
            "{name} has {} entries, expected {rows}x{cols}",
            v.len()
        )));
    }
    for (r, row) in v.chunks(cols).enumerate() {
        let s: f64 = row.iter().sum();
        if row.iter().any(|x| !(0.0..=1.0).contains(x)) || (s - 1.0).abs() > tol {
            return Err(LbmError::InvalidParameter(format!(
                "{name} row {r} is not a probability vector: {row:?}"
            )));
        }
    }
    Ok(())
}

/// Index of the first maximal entry of each row.
pub fn argmax_rows(values: &[f64], cols: usize) -> Vec<usize> {
    values
        .chunks(cols)
        .map(|row| {
            let mut best = 0;
            for (k, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// In-place softmax of log-weights with max subtraction.
pub(crate) fn normalize_log_weights(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in logits.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in logits.iter_mut() {
        *x /= total;
    }
}
