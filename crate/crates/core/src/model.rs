//! Domain types of the binary latent block model and its generative process.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{LbmError, Result};
use crate::rng::rng_from_seed;

const SIMPLEX_TOL: f64 = 1e-12;

/// An `n x q` matrix of binary responses, stored row-major.
///
/// Rows are individuals (students), columns are items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataMatrix {
    n: usize,
    q: usize,
    cells: Vec<u8>,
}

impl BinaryDataMatrix {
    pub fn new(n: usize, q: usize, cells: Vec<u8>) -> Result<Self> {
        if n == 0 || q == 0 {
            return Err(LbmError::InvalidParameter(format!(
                "matrix must be at least 1x1, got {n}x{q}"
            )));
        }
        if cells.len() != n * q {
            return Err(LbmError::DimensionMismatch(format!(
                "{n}x{q} matrix needs {} cells, got {}",
                n * q,
                cells.len()
            )));
        }
        if let Some(pos) = cells.iter().position(|&c| c > 1) {
            return Err(LbmError::InvalidParameter(format!(
                "cell ({}, {}) is {}, expected 0 or 1",
                pos / q,
                pos % q,
                cells[pos]
            )));
        }
        Ok(Self { n, q, cells })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let q = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != q) {
            return Err(LbmError::DimensionMismatch(format!(
                "row {i} has {} columns, expected {q}",
                rows[i].len()
            )));
        }
        Self::new(n, q, rows.concat())
    }

    pub fn filled(n: usize, q: usize, value: u8) -> Result<Self> {
        Self::new(n, q, vec![value; n * q])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.q + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.q..(i + 1) * self.q]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn ones(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Swaps zeros and ones.
    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            q: self.q,
            cells: self.cells.iter().map(|&c| 1 - c).collect(),
        }
    }

    /// Matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n) {
            return Err(LbmError::DimensionMismatch(format!(
                "row index {bad} out of range for {} rows",
                self.n
            )));
        }
        let mut cells = Vec::with_capacity(rows.len() * self.q);
        for &i in rows {
            cells.extend_from_slice(self.row(i));
        }
        Self::new(rows.len(), self.q, cells)
    }

    /// Matrix made of the given columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&j| j >= self.q) {
            return Err(LbmError::DimensionMismatch(format!(
                "column index {bad} out of range for {} columns",
                self.q
            )));
        }
        let mut cells = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            cells.extend(cols.iter().map(|&j| row[j]));
        }
        Self::new(self.n, cols.len(), cells)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Mixing proportions and block Bernoulli parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LbmParameters {
    pub pi: Vec<f64>,
    pub rho: Vec<f64>,
    /// Row-major `g x m`.
    pub alpha: Vec<f64>,
}

fn check_simplex(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(LbmError::InvalidParameter(format!("{name} is empty")));
    }
    if v.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(LbmError::InvalidParameter(format!(
            "{name} has a negative or non-finite entry: {v:?}"
        )));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(LbmError::InvalidParameter(format!(
            "{name} sums to {total}, expected 1"
        )));
    }
    Ok(())
}

impl LbmParameters {
    pub fn new(pi: Vec<f64>, rho: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        let p = Self { pi, rho, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_simplex("pi", &self.pi)?;
        check_simplex("rho", &self.rho)?;
        if self.alpha.len() != self.g() * self.m() {
            return Err(LbmError::DimensionMismatch(format!(
                "alpha has {} entries, expected {}x{}",
                self.alpha.len(),
                self.g(),
                self.m()
            )));
        }
        if self.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(LbmError::InvalidParameter(
                "alpha entries must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn g(&self) -> usize {
        self.pi.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.rho.len()
    }

    #[inline]
    pub fn alpha(&self, k: usize, l: usize) -> f64 {
        self.alpha[k * self.m() + l]
    }

    pub fn alpha_rows(&self) -> Vec<Vec<f64>> {
        self.alpha.chunks(self.m()).map(<[f64]>::to_vec).collect()
    }
}

/// Row labels `z` in `0..g` and column labels `w` in `0..m`. Groups may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoPartition {
    pub z: Vec<usize>,
    pub w: Vec<usize>,
    pub g: usize,
    pub m: usize,
}

impl CoPartition {
    pub fn new(z: Vec<usize>, w: Vec<usize>, g: usize, m: usize) -> Result<Self> {
        if g == 0 || m == 0 {
            return Err(LbmError::InvalidParameter(
                "group counts must be at least 1".into(),
            ));
        }
        if let Some(&k) = z.iter().find(|&&k| k >= g) {
            return Err(LbmError::InvalidParameter(format!(
                "row label {k} outside 0..{g}"
            )));
        }
        if let Some(&l) = w.iter().find(|&&l| l >= m) {
            return Err(LbmError::InvalidParameter(format!(
                "column label {l} outside 0..{m}"
            )));
        }
        Ok(Self { z, w, g, m })
    }

    fn check_dims(&self, data: &BinaryDataMatrix) -> Result<()> {
        if self.z.len() != data.n() || self.w.len() != data.q() {
            return Err(LbmError::DimensionMismatch(format!(
                "partition covers {}x{} but data is {}x{}",
                self.z.len(),
                self.w.len(),
                data.n(),
                data.q()
            )));
        }
        Ok(())
    }
}

/// Sufficient statistics of a co-partition: ones and zeros per block and group sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCounts {
    pub g: usize,
    pub m: usize,
    /// Row-major `g x m` counts of ones.
    pub n1: Vec<u64>,
    /// Row-major `g x m` counts of zeros.
    pub n0: Vec<u64>,
    pub row_sizes: Vec<u64>,
    pub col_sizes: Vec<u64>,
}

impl BlockCounts {
    #[inline]
    pub fn ones(&self, k: usize, l: usize) -> u64 {
        self.n1[k * self.m + l]
    }

    #[inline]
    pub fn zeros(&self, k: usize, l: usize) -> u64 {
        self.n0[k * self.m + l]
    }
}

/// Dirichlet(a, ..., a) prior on the proportions and Beta(b, b) on each block parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorHyperparams {
    pub a: f64,
    pub b: f64,
}

impl Default for PriorHyperparams {
    fn default() -> Self {
        Self { a: 4.0, b: 1.0 }
    }
}

impl PriorHyperparams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = Self { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(LbmError::InvalidParameter(format!(
                "hyperparameters must be positive and finite, got a={}, b={}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Uniform proportions with `alpha[k][l] = epsilon` when `k >= l`, `1 - epsilon` otherwise.
pub fn staircase_parameters(g: usize, m: usize, epsilon: f64) -> Result<LbmParameters> {
    if g == 0 || m == 0 {
        return Err(LbmError::InvalidParameter(
            "group counts must be at least 1".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(LbmError::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut alpha = Vec::with_capacity(g * m);
    for k in 0..g {
        for l in 0..m {
            alpha.push(if k >= l { epsilon } else { 1.0 - epsilon });
        }
    }
    Ok(LbmParameters {
        pi: vec![1.0 / g as f64; g],
        rho: vec![1.0 / m as f64; m],
        alpha,
    })
}

/// Draws a data matrix and its latent co-partition from the model.
pub fn simulate_dataset(
    params: &LbmParameters,
    n: usize,
    q: usize,
    seed: u64,
) -> Result<(BinaryDataMatrix, CoPartition)> {
    params.validate()?;
    if n == 0 || q == 0 {
        return Err(LbmError::InvalidParameter(format!(
            "matrix must be at least 1x1, got {n}x{q}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let row_dist = WeightedIndex::new(&params.pi)
        .map_err(|e| LbmError::InvalidParameter(format!("pi: {e}")))?;
    let col_dist = WeightedIndex::new(&params.rho)
        .map_err(|e| LbmError::InvalidParameter(format!("rho: {e}")))?;
    let z: Vec<usize> = (0..n).map(|_| row_dist.sample(&mut rng)).collect();
    let w: Vec<usize> = (0..q).map(|_| col_dist.sample(&mut rng)).collect();
    let mut cells = Vec::with_capacity(n * q);
    for &k in &z {
        for &l in &w {
            let p = params.alpha(k, l);
            cells.push(u8::from(rng.random::<f64>() < p));
        }
    }
    let data = BinaryDataMatrix::new(n, q, cells)?;
    let part = CoPartition::new(z, w, params.g(), params.m())?;
    Ok((data, part))
}

pub fn block_counts(data: &BinaryDataMatrix, part: &CoPartition) -> Result<BlockCounts> {
    part.check_dims(data)?;
    let (g, m) = (part.g, part.m);
    let mut row_sizes = vec![0u64; g];
    let mut col_sizes = vec![0u64; m];
    for &k in &part.z {
        row_sizes[k] += 1;
    }
    for &l in &part.w {
        col_sizes[l] += 1;
    }
    let mut n1 = vec![0u64; g * m];
    for (i, &k) in part.z.iter().enumerate() {
        let block_row = &mut n1[k * m..(k + 1) * m];
        for (&y, &l) in data.row(i).iter().zip(&part.w) {
            block_row[l] += y as u64;
        }
    }
    let mut n0 = vec![0u64; g * m];
    for k in 0..g {
        for l in 0..m {
            n0[k * m + l] = row_sizes[k] * col_sizes[l] - n1[k * m + l];
        }
    }
    Ok(BlockCounts {
        g,
        m,
        n1,
        n0,
        row_sizes,
        col_sizes,
    })
}
