use statrs::function::gamma::ln_gamma;

use super::{ln_prob, ln_weight, normalize_log_weights, VariationalState};
use crate::error::{LbmError, Result};
use crate::model::{BinaryDataMatrix, LbmParameters, PriorHyperparams};

/// Expected sufficient statistics shared by the updates and the free energy.
struct SoftCounts {
    /// `ones[k * m + l] = sum_ij tau_ik nu_jl y_ij`
    ones: Vec<f64>,
    /// `zeros[k * m + l] = sum_ij tau_ik nu_jl (1 - y_ij)`
    zeros: Vec<f64>,
}

/// `out[i * m + l] = sum_j y_ij nu_jl`
fn row_by_col_group(data: &BinaryDataMatrix, nu: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.n() * m];
    for i in 0..data.n() {
        let acc = &mut out[i * m..(i + 1) * m];
        for (j, &y) in data.row(i).iter().enumerate() {
            if y == 1 {
                for (a, &v) in acc.iter_mut().zip(&nu[j * m..(j + 1) * m]) {
                    *a += v;
                }
            }
        }
    }
    out
}

/// `out[j * g + k] = sum_i y_ij tau_ik`
fn col_by_row_group(data: &BinaryDataMatrix, tau: &[f64], g: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.q() * g];
    for i in 0..data.n() {
        let t = &tau[i * g..(i + 1) * g];
        for (j, &y) in data.row(i).iter().enumerate() {
            if y == 1 {
                for (a, &v) in out[j * g..(j + 1) * g].iter_mut().zip(t) {
                    *a += v;
                }
            }
        }
    }
    out
}

fn column_totals(v: &[f64], cols: usize) -> Vec<f64> {
    let mut tot = vec![0.0; cols];
    for row in v.chunks(cols) {
        for (t, &x) in tot.iter_mut().zip(row) {
            *t += x;
        }
    }
    tot
}

fn soft_counts(data: &BinaryDataMatrix, state: &VariationalState) -> SoftCounts {
    let (g, m) = (state.g, state.m);
    let s = row_by_col_group(data, &state.nu, m);
    let nu_tot = column_totals(&state.nu, m);
    let mut ones = vec![0.0; g * m];
    let mut zeros = vec![0.0; g * m];
    for i in 0..data.n() {
        let t = state.tau_row(i);
        let si = &s[i * m..(i + 1) * m];
        for k in 0..g {
            if t[k] == 0.0 {
                continue;
            }
            for l in 0..m {
                ones[k * m + l] += t[k] * si[l];
                zeros[k * m + l] += t[k] * (nu_tot[l] - si[l]);
            }
        }
    }
    SoftCounts { ones, zeros }
}

fn check_dims(
    data: &BinaryDataMatrix,
    state: &VariationalState,
    params: &LbmParameters,
) -> Result<()> {
    state.check_dims(data)?;
    if params.g() != state.g || params.m() != state.m || params.alpha.len() != state.g * state.m {
        return Err(LbmError::DimensionMismatch(format!(
            "parameters are ({}, {}) but state is ({}, {})",
            params.g(),
            params.m(),
            state.g,
            state.m
        )));
    }
    Ok(())
}

fn non_finite(what: &str) -> LbmError {
    LbmError::NumericalFailure {
        iteration: 0,
        message: format!("non-finite {what}"),
    }
}

/// Posterior mode of a Dirichlet(a + counts) draw, kept on the simplex when `a < 1`.
fn dirichlet_mode(totals: &[f64], a: f64) -> Vec<f64> {
    let raw: Vec<f64> = totals.iter().map(|&t| (t + a - 1.0).max(0.0)).collect();
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 {
        raw.into_iter().map(|x| x / sum).collect()
    } else {
        vec![1.0 / totals.len() as f64; totals.len()]
    }
}

/// One V-Bayes iteration: row responsibilities, then column responsibilities,
/// then the parameters at their conjugate-posterior modes.
///
/// Every stage maximizes [`free_energy`] in its own block of variables, so the
/// free energy never decreases across a step.
pub fn vbayes_step(
    data: &BinaryDataMatrix,
    state: &VariationalState,
    params: &LbmParameters,
    prior: &PriorHyperparams,
) -> Result<(VariationalState, LbmParameters)> {
    check_dims(data, state, params)?;
    prior.validate()?;
    let (n, q, g, m) = (state.n, state.q, state.g, state.m);
    let la: Vec<f64> = params.alpha.iter().map(|&a| ln_prob(a)).collect();
    let lb: Vec<f64> = params.alpha.iter().map(|&a| ln_prob(1.0 - a)).collect();

    let s = row_by_col_group(data, &state.nu, m);
    let nu_tot = column_totals(&state.nu, m);
    let mut tau = vec![0.0; n * g];
    for i in 0..n {
        let si = &s[i * m..(i + 1) * m];
        let row = &mut tau[i * g..(i + 1) * g];
        for (k, x) in row.iter_mut().enumerate() {
            let mut acc = ln_weight(params.pi[k]);
            for l in 0..m {
                acc += si[l] * la[k * m + l] + (nu_tot[l] - si[l]) * lb[k * m + l];
            }
            *x = acc;
        }
        normalize_log_weights(row);
    }
    if tau.iter().any(|x| !x.is_finite()) {
        return Err(non_finite("row responsibilities"));
    }

    let t = col_by_row_group(data, &tau, g);
    let tau_tot = column_totals(&tau, g);
    let mut nu = vec![0.0; q * m];
    for j in 0..q {
        let tj = &t[j * g..(j + 1) * g];
        let row = &mut nu[j * m..(j + 1) * m];
        for (l, x) in row.iter_mut().enumerate() {
            let mut acc = ln_weight(params.rho[l]);
            for k in 0..g {
                acc += tj[k] * la[k * m + l] + (tau_tot[k] - tj[k]) * lb[k * m + l];
            }
            *x = acc;
        }
        normalize_log_weights(row);
    }
    if nu.iter().any(|x| !x.is_finite()) {
        return Err(non_finite("column responsibilities"));
    }

    let new_state = VariationalState {
        n,
        q,
        g,
        m,
        tau,
        nu,
    };
    let counts = soft_counts(data, &new_state);
    let pi = dirichlet_mode(&tau_tot, prior.a);
    let rho = dirichlet_mode(&column_totals(&new_state.nu, m), prior.a);
    let alpha = counts
        .ones
        .iter()
        .zip(&counts.zeros)
        .map(|(&one, &zero)| {
            let hit = (one + prior.b - 1.0).max(0.0);
            let miss = (zero + prior.b - 1.0).max(0.0);
            if hit + miss > 0.0 {
                hit / (hit + miss)
            } else {
                0.5
            }
        })
        .collect::<Vec<_>>();
    if pi.iter().chain(&rho).chain(&alpha).any(|x| !x.is_finite()) {
        return Err(non_finite("parameters"));
    }
    Ok((new_state, LbmParameters { pi, rho, alpha }))
}

#[inline]
fn xlogy(x: f64, ly: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ly
    }
}

fn entropy(v: &[f64]) -> f64 {
    -v.iter()
        .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum::<f64>()
}

fn ln_dirichlet_density(p: &[f64], a: f64) -> f64 {
    let d = p.len() as f64;
    ln_gamma(d * a) - d * ln_gamma(a) + p.iter().map(|&x| xlogy(a - 1.0, ln_weight(x))).sum::<f64>()
}

/// Variational lower bound: expected complete-data log-likelihood, plus the
/// entropies of `tau` and `nu`, plus the log prior densities of the parameters.
///
/// Probabilities inside logarithms are clamped to `[1e-12, 1 - 1e-12]`;
/// `0 * log 0` counts as 0.
pub fn free_energy(
    data: &BinaryDataMatrix,
    state: &VariationalState,
    params: &LbmParameters,
    prior: &PriorHyperparams,
) -> Result<f64> {
    check_dims(data, state, params)?;
    prior.validate()?;
    let (g, m) = (state.g, state.m);
    let tau_tot = column_totals(&state.tau, g);
    let nu_tot = column_totals(&state.nu, m);

    let mut f = 0.0;
    for (&t, &p) in tau_tot.iter().zip(&params.pi) {
        f += xlogy(t, ln_weight(p));
    }
    for (&t, &p) in nu_tot.iter().zip(&params.rho) {
        f += xlogy(t, ln_weight(p));
    }
    let counts = soft_counts(data, state);
    for (idx, &a) in params.alpha.iter().enumerate() {
        f += xlogy(counts.ones[idx], ln_prob(a)) + xlogy(counts.zeros[idx], ln_prob(1.0 - a));
    }
    f += entropy(&state.tau) + entropy(&state.nu);

    f += ln_dirichlet_density(&params.pi, prior.a) + ln_dirichlet_density(&params.rho, prior.a);
    let b = prior.b;
    let beta_norm = ln_gamma(2.0 * b) - 2.0 * ln_gamma(b);
    for &a in &params.alpha {
        f += beta_norm + xlogy(b - 1.0, ln_prob(a)) + xlogy(b - 1.0, ln_prob(1.0 - a));
    }
    if !f.is_finite() {
        return Err(non_finite("free energy"));
    }
    Ok(f)
}
