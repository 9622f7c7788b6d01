//! Partition comparison and the subsampling robustness experiment.
//!
//! Two row partitions are compared through their contingency table. When
//! both have the same number of groups the best label switching is kept;
//! otherwise the partition with more groups is merged down onto the other
//! one, over every possible union of its groups.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{LbmError, Result};
use crate::inference::FitOptions;
use crate::model::{simulate_dataset, staircase_parameters, BinaryDataMatrix, PriorHyperparams};
use crate::rng::{derive_seed, rng_from_seed};
use crate::selection::{select_model, Grid};

/// Largest group count handled by exhaustive matching.
pub const MAX_MATCH_GROUPS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub g_ref: usize,
    pub g_est: usize,
    /// Row-major `g_ref x g_est`.
    pub counts: Vec<u64>,
}

impl ContingencyTable {
    #[inline]
    pub fn get(&self, k_ref: usize, k_est: usize) -> u64 {
        self.counts[k_ref * self.g_est + k_est]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.g_est)
            .map(<[u64]>::to_vec)
            .collect()
    }

    fn transposed(&self) -> Self {
        let mut counts = vec![0; self.counts.len()];
        for r in 0..self.g_ref {
            for e in 0..self.g_est {
                counts[e * self.g_ref + r] = self.get(r, e);
            }
        }
        Self {
            g_ref: self.g_est,
            g_est: self.g_ref,
            counts,
        }
    }
}

pub fn contingency(
    ref_z: &[usize],
    est_z: &[usize],
    g_ref: usize,
    g_est: usize,
) -> Result<ContingencyTable> {
    if ref_z.len() != est_z.len() {
        return Err(LbmError::DimensionMismatch(format!(
            "reference has {} labels, estimate has {}",
            ref_z.len(),
            est_z.len()
        )));
    }
    if g_ref == 0 || g_est == 0 {
        return Err(LbmError::InvalidParameter(
            "group counts must be at least 1".into(),
        ));
    }
    let mut counts = vec![0u64; g_ref * g_est];
    for (&r, &e) in ref_z.iter().zip(est_z) {
        if r >= g_ref || e >= g_est {
            return Err(LbmError::InvalidParameter(format!(
                "label pair ({r}, {e}) outside ({g_ref}, {g_est}) groups"
            )));
        }
        counts[r * g_est + e] += 1;
    }
    Ok(ContingencyTable {
        g_ref,
        g_est,
        counts,
    })
}

/// How groups were put in correspondence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupMap {
    /// `map[k_est]` is the reference group that estimated group `k_est` lands on
    /// (a permutation when group counts agree, a union otherwise).
    EstimatedToReference(Vec<usize>),
    /// `map[k_ref]` is the estimated group that reference group `k_ref` lands on.
    ReferenceToEstimated(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub misclassified: u64,
    pub rate: f64,
    pub mapping: GroupMap,
}

/// Calls `visit` with every restricted growth string of length `len` using
/// exactly `blocks` distinct values, in lexicographic order.
fn for_each_set_partition(len: usize, blocks: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(
        buf: &mut Vec<usize>,
        len: usize,
        blocks: usize,
        used: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        let i = buf.len();
        if i == len {
            if used == blocks {
                visit(buf);
            }
            return;
        }
        // not enough positions left to open the missing blocks
        if blocks - used > len - i {
            return;
        }
        let top = if i == 0 { 0 } else { used.min(blocks - 1) };
        for v in 0..=top {
            buf.push(v);
            rec(buf, len, blocks, used.max(v + 1), visit);
            buf.pop();
        }
    }
    rec(&mut Vec::with_capacity(len), len, blocks, 0, visit);
}

/// Lexicographic successor of a permutation; `false` once the last one is reached.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Maximum total agreement when the `table.g_est` columns are merged onto the
/// `table.g_ref` rows (`g_est >= g_ref`); returns the agreement and the
/// lexicographically smallest column-to-row map achieving it.
fn best_union(table: &ContingencyTable) -> (u64, Vec<usize>) {
    let (r, c) = (table.g_ref, table.g_est);
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut block_sums = vec![0u64; r * r];
    let mut perm: Vec<usize> = (0..r).collect();
    let mut mapping = vec![0usize; c];
    for_each_set_partition(c, r, &mut |rgs| {
        block_sums.iter_mut().for_each(|x| *x = 0);
        for (col, &b) in rgs.iter().enumerate() {
            for row in 0..r {
                block_sums[b * r + row] += table.get(row, col);
            }
        }
        perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
        loop {
            let score: u64 = (0..r).map(|b| block_sums[b * r + perm[b]]).sum();
            for (col, &b) in rgs.iter().enumerate() {
                mapping[col] = perm[b];
            }
            let better = match &best {
                None => true,
                Some((s, m)) => score > *s || (score == *s && mapping < *m),
            };
            if better {
                best = Some((score, mapping.clone()));
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
    });
    best.expect("at least one surjection exists")
}

/// Smallest number of disagreeing rows over label switchings and group unions.
pub fn best_match(
    ref_z: &[usize],
    est_z: &[usize],
    g_ref: usize,
    g_est: usize,
) -> Result<MatchResult> {
    for g in [g_ref, g_est] {
        if g > MAX_MATCH_GROUPS {
            return Err(LbmError::Unsupported(g, MAX_MATCH_GROUPS));
        }
    }
    let table = contingency(ref_z, est_z, g_ref, g_est)?;
    let total = table.total();
    let (agree, mapping) = if g_est >= g_ref {
        let (agree, map) = best_union(&table);
        (agree, GroupMap::EstimatedToReference(map))
    } else {
        let (agree, map) = best_union(&table.transposed());
        (agree, GroupMap::ReferenceToEstimated(map))
    };
    let misclassified = total - agree;
    Ok(MatchResult {
        misclassified,
        rate: if total == 0 {
            0.0
        } else {
            misclassified as f64 / total as f64
        },
        mapping,
    })
}

/// Per-group sample sizes: floors of `n_sub * p_k`, with the leftover units
/// going to the largest fractional parts (lower group index first on ties).
pub fn allocate(n_sub: usize, proportions: &[f64]) -> Result<Vec<usize>> {
    if proportions.is_empty()
        || proportions.iter().any(|&p| !p.is_finite() || p < 0.0)
        || (proportions.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(LbmError::InvalidParameter(format!(
            "proportions must form a probability vector, got {proportions:?}"
        )));
    }
    let quotas: Vec<f64> = proportions.iter().map(|&p| n_sub as f64 * p).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(n_sub.saturating_sub(assigned)) {
        alloc[k] += 1;
    }
    Ok(alloc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subsample {
    pub data: BinaryDataMatrix,
    /// Reference labels of the kept rows.
    pub labels: Vec<usize>,
    /// Original index of each kept row, increasing.
    pub rows: Vec<usize>,
}

/// Draws `n_sub` rows without replacement, stratified by `ref_z` with group
/// sizes from [`allocate`].
pub fn stratified_subsample(
    data: &BinaryDataMatrix,
    ref_z: &[usize],
    proportions: &[f64],
    n_sub: usize,
    seed: u64,
) -> Result<Subsample> {
    if ref_z.len() != data.n() {
        return Err(LbmError::DimensionMismatch(format!(
            "{} labels for {} rows",
            ref_z.len(),
            data.n()
        )));
    }
    if n_sub == 0 || n_sub > data.n() {
        return Err(LbmError::InvalidParameter(format!(
            "sample size {n_sub} must lie in 1..={}",
            data.n()
        )));
    }
    let g = proportions.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (i, &k) in ref_z.iter().enumerate() {
        if k >= g {
            return Err(LbmError::InvalidParameter(format!(
                "label {k} has no proportion ({g} groups)"
            )));
        }
        members[k].push(i);
    }
    let alloc = allocate(n_sub, proportions)?;
    for (group, (&need, rows)) in alloc.iter().zip(&members).enumerate() {
        if need > rows.len() {
            return Err(LbmError::InfeasibleSample {
                group,
                needed: need,
                available: rows.len(),
            });
        }
    }
    let mut rng = rng_from_seed(seed);
    let mut rows: Vec<usize> = Vec::with_capacity(n_sub);
    for (&need, group_rows) in alloc.iter().zip(&members) {
        rows.extend(
            sample(&mut rng, group_rows.len(), need)
                .into_iter()
                .map(|p| group_rows[p]),
        );
    }
    rows.sort_unstable();
    Ok(Subsample {
        data: data.select_rows(&rows)?,
        labels: rows.iter().map(|&i| ref_z[i]).collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessConfig {
    pub epsilons: Vec<f64>,
    pub datasets_per_eps: usize,
    pub n: usize,
    pub q: usize,
    /// Simulated `(g, m)`; full-data selections must return it.
    pub target: (usize, usize),
    pub sizes: Vec<usize>,
    pub samples_per_size: usize,
    pub grid: Grid,
    pub prior: PriorHyperparams,
    pub fit: FitOptions,
    /// Simulation attempts per accepted data set before giving up.
    pub max_attempts: usize,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.15, 0.2, 0.25],
            datasets_per_eps: 100,
            n: 137,
            q: 33,
            target: (3, 4),
            sizes: vec![20, 40, 60, 80, 100, 120],
            samples_per_size: 10,
            grid: Grid::default(),
            prior: PriorHyperparams::default(),
            fit: FitOptions::default(),
            max_attempts: 1000,
        }
    }
}

/// A simulated data set whose full-data selection returned the target pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedDataset {
    pub epsilon: f64,
    pub dataset: usize,
    /// Simulations discarded before this one was accepted.
    pub rejected: usize,
    pub proportions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub epsilon: f64,
    pub dataset: usize,
    pub n: usize,
    pub sample: usize,
    pub pair: (usize, usize),
    pub misclassified: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub datasets: Vec<AcceptedDataset>,
    pub outcomes: Vec<SampleOutcome>,
}

impl RobustnessReport {
    /// Selected-pair counts for one `(epsilon, n)` cell.
    pub fn pair_distribution(&self, epsilon: f64, n: usize) -> BTreeMap<(usize, usize), usize> {
        let mut out = BTreeMap::new();
        for o in self
            .outcomes
            .iter()
            .filter(|o| o.epsilon == epsilon && o.n == n)
        {
            *out.entry(o.pair).or_insert(0) += 1;
        }
        out
    }

    /// Misclassification rates of the samples that selected `g_hat` row groups.
    pub fn rates(&self, epsilon: f64, n: usize, g_hat: usize) -> Vec<f64> {
        self.outcomes
            .iter()
            .filter(|o| o.epsilon == epsilon && o.n == n && o.pair.0 == g_hat)
            .map(|o| o.rate)
            .collect()
    }
}

struct Reference {
    data: BinaryDataMatrix,
    labels: Vec<usize>,
    proportions: Vec<f64>,
    rejected: usize,
    seed: u64,
}

fn accept_dataset(
    config: &RobustnessConfig,
    eps_index: usize,
    epsilon: f64,
    dataset: usize,
    seed: u64,
) -> Result<Reference> {
    let params = staircase_parameters(config.target.0, config.target.1, epsilon)?;
    for attempt in 0..config.max_attempts {
        let ds_seed = derive_seed(seed, &[eps_index as u64, dataset as u64, attempt as u64]);
        let (data, _) = simulate_dataset(&params, config.n, config.q, derive_seed(ds_seed, &[0]))?;
        let sel = select_model(
            &data,
            config.grid,
            &config.prior,
            &config.fit,
            derive_seed(ds_seed, &[1]),
        )?;
        if sel.best_pair != config.target {
            continue;
        }
        let best = sel.best_fit();
        let labels = best.map_part.z.clone();
        let proportions = best.params.pi.clone();
        // every requested sample size must be drawable from this reference partition
        let mut sizes = vec![0usize; proportions.len()];
        labels.iter().for_each(|&k| sizes[k] += 1);
        let mut feasible = true;
        for &n_sub in &config.sizes {
            let alloc = allocate(n_sub, &proportions)?;
            feasible &= alloc.iter().zip(&sizes).all(|(a, s)| a <= s);
        }
        if !feasible {
            continue;
        }
        return Ok(Reference {
            data,
            labels,
            proportions,
            rejected: attempt,
            seed: ds_seed,
        });
    }
    Err(LbmError::InvalidParameter(format!(
        "no simulated data set selected {:?} within {} attempts",
        config.target, config.max_attempts
    )))
}

/// Subsampling robustness study: for each accepted data set and sample size,
/// draws stratified subsamples, reruns model selection on each, and compares
/// the selected row partition with the full-data one.
pub fn robustness_experiment(config: &RobustnessConfig, seed: u64) -> Result<RobustnessReport> {
    if config.sizes.iter().any(|&s| s == 0 || s > config.n) || config.samples_per_size == 0 {
        return Err(LbmError::InvalidParameter(format!(
            "sample sizes must lie in 1..={} and samples_per_size must be positive",
            config.n
        )));
    }
    config.fit.validate()?;
    let g_ref = config.target.0;
    let mut report = RobustnessReport {
        datasets: Vec::new(),
        outcomes: Vec::new(),
    };
    for (e, &epsilon) in config.epsilons.iter().enumerate() {
        let per_dataset = (0..config.datasets_per_eps)
            .into_par_iter()
            .map(|d| {
                let reference = accept_dataset(config, e, epsilon, d, seed)
                    .map_err(|err| err.context(format!("epsilon={epsilon}, dataset={d}")))?;
                let jobs: Vec<(usize, usize)> = (0..config.sizes.len())
                    .flat_map(|s| (0..config.samples_per_size).map(move |t| (s, t)))
                    .collect();
                let outcomes = jobs
                    .into_par_iter()
                    .map(|(s, t)| {
                        let n_sub = config.sizes[s];
                        let ctx =
                            || format!("epsilon={epsilon}, dataset={d}, n={n_sub}, sample={t}");
                        let job_seed = derive_seed(reference.seed, &[2, s as u64, t as u64]);
                        let sub = stratified_subsample(
                            &reference.data,
                            &reference.labels,
                            &reference.proportions,
                            n_sub,
                            derive_seed(job_seed, &[0]),
                        )
                        .map_err(|err| err.context(ctx()))?;
                        let sel = select_model(
                            &sub.data,
                            config.grid,
                            &config.prior,
                            &config.fit,
                            derive_seed(job_seed, &[1]),
                        )
                        .map_err(|err| err.context(ctx()))?;
                        let m = best_match(
                            &sub.labels,
                            &sel.best_fit().map_part.z,
                            g_ref,
                            sel.best_pair.0,
                        )
                        .map_err(|err| err.context(ctx()))?;
                        Ok(SampleOutcome {
                            epsilon,
                            dataset: d,
                            n: n_sub,
                            sample: t,
                            pair: sel.best_pair,
                            misclassified: m.misclassified,
                            rate: m.rate,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((
                    AcceptedDataset {
                        epsilon,
                        dataset: d,
                        rejected: reference.rejected,
                        proportions: reference.proportions,
                    },
                    outcomes,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        for (ds, outcomes) in per_dataset {
            report.datasets.push(ds);
            report.outcomes.extend(outcomes);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Labels realizing the worked label-switching example (rows G1..G3).
    fn switching_example() -> (Vec<usize>, Vec<usize>) {
        let table = [[6, 1, 1], [0, 1, 6], [0, 5, 0]];
        let mut r = Vec::new();
        let mut e = Vec::new();
        for (k, row) in table.iter().enumerate() {
            for (kk, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    r.push(k);
                    e.push(kk);
                }
            }
        }
        (r, e)
    }

    #[test]
    fn contingency_examples() {
        let z = vec![0, 1, 2, 1, 0];
        let t = contingency(&z, &z, 3, 3).unwrap();
        assert_eq!(t.rows(), vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);

        let (r, e) = switching_example();
        assert_eq!(r.len(), 20);
        let t = contingency(&r, &e, 3, 3).unwrap();
        assert_eq!(t.rows(), vec![vec![6, 1, 1], vec![0, 1, 6], vec![0, 5, 0]]);

        let t = contingency(&z, &[0; 5], 3, 2).unwrap();
        assert_eq!(t.rows(), vec![vec![2, 0], vec![2, 0], vec![1, 0]]);

        assert!(contingency(&z, &[0; 4], 3, 2).is_err());
    }

    #[test]
    fn switching_example_needs_three_misclassified() {
        let (r, e) = switching_example();
        let m = best_match(&r, &e, 3, 3).unwrap();
        assert_eq!(m.misclassified, 3);
        assert_eq!(m.mapping, GroupMap::EstimatedToReference(vec![0, 2, 1]));
        assert!((m.rate - 0.15).abs() < 1e-15);
    }

    #[test]
    fn permuted_labels_match_perfectly() {
        let r = vec![0, 0, 1, 2, 2, 1, 3];
        let e: Vec<usize> = r.iter().map(|&k| [2, 3, 0, 1][k]).collect();
        assert_eq!(best_match(&r, &e, 4, 4).unwrap().misclassified, 0);
    }

    #[test]
    fn merges_in_both_directions() {
        let r = vec![0, 0, 0, 1, 1, 1];
        let e = vec![0, 1, 1, 2, 2, 3];
        let m = best_match(&r, &e, 2, 4).unwrap();
        assert_eq!(m.misclassified, 0);
        assert_eq!(m.mapping, GroupMap::EstimatedToReference(vec![0, 0, 1, 1]));
        let m = best_match(&e, &r, 4, 2).unwrap();
        assert_eq!(m.misclassified, 0);
        assert_eq!(m.mapping, GroupMap::ReferenceToEstimated(vec![0, 0, 1, 1]));
    }

    #[test]
    fn enumeration_bound() {
        assert!(matches!(
            best_match(&[0], &[0], 9, 1),
            Err(LbmError::Unsupported(9, 8))
        ));
        // largest supported case stays cheap
        let r: Vec<usize> = (0..40).map(|i| i % 7).collect();
        let e: Vec<usize> = (0..40).map(|i| (i * 3) % 8).collect();
        assert!(best_match(&r, &e, 7, 8).is_ok());
    }

    #[test]
    fn set_partition_counts_are_stirling_numbers() {
        let count = |n, k| {
            let mut c = 0;
            for_each_set_partition(n, k, &mut |_| c += 1);
            c
        };
        assert_eq!(count(4, 2), 7);
        assert_eq!(count(5, 3), 25);
        assert_eq!(count(8, 7), 28);
        assert_eq!(count(3, 3), 1);
    }

    #[test]
    fn largest_remainder_allocation() {
        assert_eq!(allocate(20, &[1.0 / 3.0; 3]).unwrap(), vec![7, 7, 6]);
        assert_eq!(allocate(10, &[0.25, 0.25, 0.5]).unwrap(), vec![3, 2, 5]);
        assert_eq!(allocate(7, &[1.0]).unwrap(), vec![7]);
        assert!(allocate(5, &[0.5, 0.6]).is_err());
    }

    #[test]
    fn full_size_subsample_keeps_every_row() {
        let data =
            BinaryDataMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1], vec![0, 0]]).unwrap();
        let z = vec![0, 1, 1, 0];
        let s = stratified_subsample(&data, &z, &[0.5, 0.5], 4, 9).unwrap();
        assert_eq!(s.rows, vec![0, 1, 2, 3]);
        assert_eq!(s.data, data);
        assert_eq!(s.labels, z);
    }

    #[test]
    fn subsample_is_deterministic_and_stratified() {
        let data = BinaryDataMatrix::filled(30, 2, 0).unwrap();
        let z: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let a = stratified_subsample(&data, &z, &[1.0 / 3.0; 3], 20, 5).unwrap();
        let b = stratified_subsample(&data, &z, &[1.0 / 3.0; 3], 20, 5).unwrap();
        assert_eq!(a, b);
        let mut per_group = [0; 3];
        a.labels.iter().for_each(|&k| per_group[k] += 1);
        assert_eq!(per_group, [7, 7, 6]);
    }

    #[test]
    fn infeasible_subsample() {
        let data = BinaryDataMatrix::filled(4, 1, 0).unwrap();
        let err = stratified_subsample(&data, &[0, 0, 0, 1], &[0.5, 0.5], 4, 1).unwrap_err();
        assert!(matches!(
            err,
            LbmError::InfeasibleSample {
                group: 1,
                needed: 2,
                available: 1
            }
        ));
    }
}
