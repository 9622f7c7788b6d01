use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Beta, Gamma};

use super::{ln_prob, ln_weight, normalize_log_weights};
use crate::error::{LbmError, Result};
use crate::model::{block_counts, BinaryDataMatrix, CoPartition, LbmParameters, PriorHyperparams};
use crate::rng::{rng_from_seed, LbmRng};

/// Gibbs sampler over the co-partition and parameters, used to pick a
/// starting point for V-Bayes.
///
/// Starts from a uniformly random co-partition, draws parameters from their
/// conjugate posteriors, then runs `sweeps` full sweeps over row labels,
/// column labels, proportions and block parameters. Returns the last state.
pub fn gibbs_init(
    data: &BinaryDataMatrix,
    g: usize,
    m: usize,
    prior: &PriorHyperparams,
    sweeps: usize,
    seed: u64,
) -> Result<(LbmParameters, CoPartition)> {
    prior.validate()?;
    if sweeps == 0 {
        return Err(LbmError::InvalidParameter(
            "sweeps must be at least 1".into(),
        ));
    }
    if g == 0 || m == 0 {
        return Err(LbmError::InvalidParameter(
            "group counts must be at least 1".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let z = (0..data.n()).map(|_| rng.random_range(0..g)).collect();
    let w = (0..data.q()).map(|_| rng.random_range(0..m)).collect();
    let mut part = CoPartition::new(z, w, g, m)?;
    let mut params = sample_parameters(data, &part, prior, &mut rng)?;

    let mut logits = vec![0.0; g.max(m)];
    for _ in 0..sweeps {
        let (la, lb) = log_tables(&params);
        sample_row_labels(data, &mut part, &params, &la, &lb, &mut logits, &mut rng);
        sample_col_labels(data, &mut part, &params, &la, &lb, &mut logits, &mut rng);
        params = sample_parameters(data, &part, prior, &mut rng)?;
    }
    Ok((params, part))
}

fn log_tables(params: &LbmParameters) -> (Vec<f64>, Vec<f64>) {
    let la = params.alpha.iter().map(|&a| ln_prob(a)).collect();
    let lb = params.alpha.iter().map(|&a| ln_prob(1.0 - a)).collect();
    (la, lb)
}

fn sample_row_labels(
    data: &BinaryDataMatrix,
    part: &mut CoPartition,
    params: &LbmParameters,
    la: &[f64],
    lb: &[f64],
    logits: &mut [f64],
    rng: &mut LbmRng,
) {
    let (g, m) = (part.g, part.m);
    let mut col_sizes = vec![0.0; m];
    for &l in &part.w {
        col_sizes[l] += 1.0;
    }
    let ln_pi: Vec<f64> = params.pi.iter().map(|&p| ln_weight(p)).collect();
    let mut ones = vec![0.0; m];
    let logits = &mut logits[..g];
    for i in 0..data.n() {
        ones.iter_mut().for_each(|x| *x = 0.0);
        for (&y, &l) in data.row(i).iter().zip(&part.w) {
            ones[l] += y as f64;
        }
        for (k, logit) in logits.iter_mut().enumerate() {
            let mut s = ln_pi[k];
            for l in 0..m {
                s += ones[l] * la[k * m + l] + (col_sizes[l] - ones[l]) * lb[k * m + l];
            }
            *logit = s;
        }
        part.z[i] = draw_categorical(logits, rng);
    }
}

fn sample_col_labels(
    data: &BinaryDataMatrix,
    part: &mut CoPartition,
    params: &LbmParameters,
    la: &[f64],
    lb: &[f64],
    logits: &mut [f64],
    rng: &mut LbmRng,
) {
    let (g, m, q) = (part.g, part.m, data.q());
    let mut row_sizes = vec![0.0; g];
    for &k in &part.z {
        row_sizes[k] += 1.0;
    }
    // ones[j * g + k]: ones of column j inside row group k
    let mut ones = vec![0.0; q * g];
    for (i, &k) in part.z.iter().enumerate() {
        for (j, &y) in data.row(i).iter().enumerate() {
            ones[j * g + k] += y as f64;
        }
    }
    let ln_rho: Vec<f64> = params.rho.iter().map(|&p| ln_weight(p)).collect();
    let logits = &mut logits[..m];
    for j in 0..q {
        let col = &ones[j * g..(j + 1) * g];
        for (l, logit) in logits.iter_mut().enumerate() {
            let mut s = ln_rho[l];
            for k in 0..g {
                s += col[k] * la[k * m + l] + (row_sizes[k] - col[k]) * lb[k * m + l];
            }
            *logit = s;
        }
        part.w[j] = draw_categorical(logits, rng);
    }
}

fn draw_categorical(logits: &mut [f64], rng: &mut LbmRng) -> usize {
    normalize_log_weights(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in logits.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left `acc` just below 1
    logits.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn sample_parameters(
    data: &BinaryDataMatrix,
    part: &CoPartition,
    prior: &PriorHyperparams,
    rng: &mut LbmRng,
) -> Result<LbmParameters> {
    let counts = block_counts(data, part)?;
    let pi = sample_dirichlet(&counts.row_sizes, prior.a, rng)?;
    let rho = sample_dirichlet(&counts.col_sizes, prior.a, rng)?;
    let mut alpha = Vec::with_capacity(part.g * part.m);
    for (&ones, &zeros) in counts.n1.iter().zip(&counts.n0) {
        let beta = Beta::new(ones as f64 + prior.b, zeros as f64 + prior.b)
            .map_err(|e| LbmError::InvalidParameter(format!("beta posterior: {e}")))?;
        alpha.push(beta.sample(rng));
    }
    Ok(LbmParameters { pi, rho, alpha })
}

fn sample_dirichlet(sizes: &[u64], a: f64, rng: &mut LbmRng) -> Result<Vec<f64>> {
    let mut draws = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let gamma = Gamma::new(s as f64 + a, 1.0)
            .map_err(|e| LbmError::InvalidParameter(format!("dirichlet posterior: {e}")))?;
        draws.push(gamma.sample(rng));
    }
    let total: f64 = draws.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        // every gamma draw underflowed; only reachable with tiny shapes
        return Ok(vec![1.0 / sizes.len() as f64; sizes.len()]);
    }
    Ok(draws.into_iter().map(|x| x / total).collect())
}
