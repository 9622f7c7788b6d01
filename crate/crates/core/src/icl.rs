//! Exact integrated completed likelihood of a co-partition.
//!
//! With Dirichlet(a) priors on the proportions and Beta(b, b) priors on the
//! block parameters, the parameters integrate out in closed form and the
//! criterion depends on the data only through [`BlockCounts`].

use statrs::function::gamma::ln_gamma;

use crate::error::{LbmError, Result};
use crate::model::{block_counts, BinaryDataMatrix, BlockCounts, CoPartition, PriorHyperparams};

pub fn icl(
    data: &BinaryDataMatrix,
    part: &CoPartition,
    g: usize,
    m: usize,
    prior: &PriorHyperparams,
) -> Result<f64> {
    prior.validate()?;
    if part.g != g || part.m != m {
        return Err(LbmError::DimensionMismatch(format!(
            "partition declares ({}, {}) groups but ICL was requested for ({g}, {m})",
            part.g, part.m
        )));
    }
    let counts = block_counts(data, part)?;
    Ok(icl_from_counts(&counts, prior))
}

/// ICL evaluated directly from sufficient statistics.
pub fn icl_from_counts(counts: &BlockCounts, prior: &PriorHyperparams) -> f64 {
    let (a, b) = (prior.a, prior.b);
    let (g, m) = (counts.g as f64, counts.m as f64);
    let n: u64 = counts.row_sizes.iter().sum();
    let q: u64 = counts.col_sizes.iter().sum();

    let mut value = ln_gamma(g * a) + ln_gamma(m * a) - (m + g) * ln_gamma(a)
        + m * g * (ln_gamma(2.0 * b) - 2.0 * ln_gamma(b))
        - ln_gamma(n as f64 + g * a)
        - ln_gamma(q as f64 + m * a);
    value += counts
        .row_sizes
        .iter()
        .map(|&s| ln_gamma(s as f64 + a))
        .sum::<f64>();
    value += counts
        .col_sizes
        .iter()
        .map(|&s| ln_gamma(s as f64 + a))
        .sum::<f64>();
    for (k, &rk) in counts.row_sizes.iter().enumerate() {
        for (l, &cl) in counts.col_sizes.iter().enumerate() {
            value += ln_gamma(counts.ones(k, l) as f64 + b)
                + ln_gamma(counts.zeros(k, l) as f64 + b)
                - ln_gamma((rk * cl) as f64 + 2.0 * b);
        }
    }
    value
}
