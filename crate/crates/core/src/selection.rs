//! ICL model selection over a `(g, m)` grid and the two experiment protocols
//! built on it: restart tuning on simulated data and the repeated-run
//! reference-model study.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{LbmError, Result};
use crate::inference::{chain_seed, fit, fit_chain, FitOptions, FitResult};
use crate::model::{simulate_dataset, staircase_parameters, BinaryDataMatrix, PriorHyperparams};
use crate::rng::derive_seed;

/// Grid bounds: `g` runs over `1..=g_max` and `m` over `1..=m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub g_max: usize,
    pub m_max: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { g_max: 7, m_max: 7 }
    }
}

impl Grid {
    pub fn new(g_max: usize, m_max: usize) -> Result<Self> {
        if g_max == 0 || m_max == 0 {
            return Err(LbmError::InvalidParameter(
                "grid bounds must be at least 1".into(),
            ));
        }
        Ok(Self { g_max, m_max })
    }

    /// Cells in row-major order: `(1,1), (1,2), ..., (g_max, m_max)`.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        (1..=self.g_max)
            .flat_map(|g| (1..=self.m_max).map(move |m| (g, m)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// One fit per grid cell, in [`Grid::cells`] order.
    pub grid: Vec<FitResult>,
    pub best_pair: (usize, usize),
    best_index: usize,
}

impl SelectionResult {
    pub fn best_fit(&self) -> &FitResult {
        &self.grid[self.best_index]
    }

    pub fn cell(&self, g: usize, m: usize) -> Option<&FitResult> {
        self.grid.iter().find(|f| f.g == g && f.m == m)
    }
}

/// Seed handed to [`fit`] for grid cell `(g, m)`.
pub fn cell_seed(seed: u64, g: usize, m: usize) -> u64 {
    derive_seed(seed, &[g as u64, m as u64])
}

/// Whether `(icl, g, m)` beats the incumbent: higher ICL, then smaller
/// `g + m`, then smaller `g`.
fn beats(candidate: &FitResult, incumbent: &FitResult) -> bool {
    if candidate.icl_value != incumbent.icl_value {
        return candidate.icl_value > incumbent.icl_value;
    }
    (candidate.g + candidate.m, candidate.g) < (incumbent.g + incumbent.m, incumbent.g)
}

fn argmax_icl(fits: &[FitResult]) -> usize {
    let mut best = 0;
    for (idx, f) in fits.iter().enumerate().skip(1) {
        if beats(f, &fits[best]) {
            best = idx;
        }
    }
    best
}

fn assemble(grid: Vec<FitResult>) -> SelectionResult {
    let best_index = argmax_icl(&grid);
    let best = &grid[best_index];
    SelectionResult {
        best_pair: (best.g, best.m),
        best_index,
        grid,
    }
}

/// Fits every cell of the grid and returns the ICL-maximizing pair.
pub fn select_model(
    data: &BinaryDataMatrix,
    grid: Grid,
    prior: &PriorHyperparams,
    opts: &FitOptions,
    seed: u64,
) -> Result<SelectionResult> {
    Grid::new(grid.g_max, grid.m_max)?;
    opts.validate()?;
    let fits = grid
        .cells()
        .into_par_iter()
        .map(|(g, m)| {
            fit(data, g, m, prior, opts, cell_seed(seed, g, m)).map_err(|e| LbmError::CellFailed {
                g,
                m,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(fits))
}

/// Grid fits that grow one restart chain at a time.
///
/// After `add_restart` has been called `t` times, the state equals
/// `select_model(data, grid, prior, opts.with_restarts(t), seed)`: chain `r`
/// of cell `(g, m)` uses the same seed and replaces the incumbent only on a
/// strictly larger free energy.
struct IncrementalSelection<'a> {
    data: &'a BinaryDataMatrix,
    grid: Grid,
    prior: &'a PriorHyperparams,
    opts: FitOptions,
    seed: u64,
    restarts: usize,
    fits: Vec<FitResult>,
}

impl<'a> IncrementalSelection<'a> {
    fn new(
        data: &'a BinaryDataMatrix,
        grid: Grid,
        prior: &'a PriorHyperparams,
        opts: FitOptions,
        seed: u64,
    ) -> Self {
        Self {
            data,
            grid,
            prior,
            opts,
            seed,
            restarts: 0,
            fits: Vec::new(),
        }
    }

    fn add_restart(&mut self) -> Result<(usize, usize)> {
        let r = self.restarts;
        let chains = self
            .grid
            .cells()
            .into_par_iter()
            .map(|(g, m)| {
                let s = chain_seed(cell_seed(self.seed, g, m), r);
                fit_chain(self.data, g, m, self.prior, &self.opts, s, r)
            })
            .collect::<Vec<_>>();
        if r == 0 {
            self.fits = chains
                .into_iter()
                .zip(self.grid.cells())
                .map(|(c, (g, m))| {
                    c.map_err(|e| LbmError::CellFailed {
                        g,
                        m,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        } else {
            for (slot, chain) in self.fits.iter_mut().zip(chains) {
                // failed later chains just lose the comparison
                if let Ok(c) = chain {
                    if c.free_energy > slot.free_energy {
                        *slot = c;
                    }
                }
            }
        }
        self.restarts += 1;
        let best = &self.fits[argmax_icl(&self.fits)];
        Ok((best.g, best.m))
    }
}

/// Stopping restart count for one simulated data set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopTime {
    /// Smallest restart count that selected the target pair, or the cap.
    pub t: usize,
    /// The target was never selected up to the cap.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningRecord {
    pub epsilon: f64,
    pub stops: Vec<StopTime>,
}

impl TuningRecord {
    /// Number of data sets stopping at each `T` (censored runs excluded).
    pub fn distribution(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for s in self.stops.iter().filter(|s| !s.censored) {
            *out.entry(s.t).or_insert(0) += 1;
        }
        out
    }

    pub fn censored(&self) -> usize {
        self.stops.iter().filter(|s| s.censored).count()
    }

    pub fn stopped_within(&self, t: usize) -> usize {
        self.stops
            .iter()
            .filter(|s| !s.censored && s.t <= t)
            .count()
    }
}

/// Simulation design and search settings for [`tune_restarts`].
#[derive(Debug, Clone, PartialEq)]
pub struct TuningConfig {
    pub epsilons: Vec<f64>,
    pub datasets_per_eps: usize,
    pub n: usize,
    pub q: usize,
    /// Simulated `(g, m)`, also the pair that stops the search.
    pub target: (usize, usize),
    pub grid: Grid,
    pub prior: PriorHyperparams,
    /// `restarts` is ignored; the search drives it.
    pub fit: FitOptions,
    pub t_cap: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.05, 0.15, 0.2, 0.25, 0.3],
            datasets_per_eps: 100,
            n: 137,
            q: 33,
            target: (3, 4),
            grid: Grid::default(),
            prior: PriorHyperparams::default(),
            fit: FitOptions::default(),
            t_cap: 200,
        }
    }
}

/// Seeds for data set `d` of the `e`-th epsilon: (simulation, selection).
pub fn tuning_seeds(seed: u64, eps_index: usize, dataset: usize) -> (u64, u64) {
    let base = [eps_index as u64, dataset as u64];
    (
        derive_seed(seed, &[base[0], base[1], 0]),
        derive_seed(seed, &[base[0], base[1], 1]),
    )
}

/// Smallest restart count in `1..=t_cap` selecting `target`.
pub fn stop_time(
    data: &BinaryDataMatrix,
    target: (usize, usize),
    grid: Grid,
    prior: &PriorHyperparams,
    opts: &FitOptions,
    t_cap: usize,
    seed: u64,
) -> Result<StopTime> {
    let mut search = IncrementalSelection::new(data, grid, prior, *opts, seed);
    for t in 1..=t_cap {
        if search.add_restart()? == target {
            return Ok(StopTime { t, censored: false });
        }
    }
    Ok(StopTime {
        t: t_cap,
        censored: true,
    })
}

/// For each epsilon, simulates staircase data sets and records how many
/// restarts per grid cell were needed before the simulated pair was selected.
pub fn tune_restarts(config: &TuningConfig, seed: u64) -> Result<Vec<TuningRecord>> {
    if config.t_cap == 0 {
        return Err(LbmError::InvalidParameter(
            "t_cap must be at least 1".into(),
        ));
    }
    config.fit.validate()?;
    let (tg, tm) = config.target;
    config
        .epsilons
        .iter()
        .enumerate()
        .map(|(e, &epsilon)| {
            let params = staircase_parameters(tg, tm, epsilon)?;
            let stops = (0..config.datasets_per_eps)
                .into_par_iter()
                .map(|d| {
                    let (sim_seed, sel_seed) = tuning_seeds(seed, e, d);
                    let (data, _) = simulate_dataset(&params, config.n, config.q, sim_seed)?;
                    stop_time(
                        &data,
                        config.target,
                        config.grid,
                        &config.prior,
                        &config.fit,
                        config.t_cap,
                        sel_seed,
                    )
                    .map_err(|err| err.context(format!("epsilon={epsilon}, dataset={d}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TuningRecord { epsilon, stops })
        })
        .collect()
}

/// Order statistics in the layout of R's `summary()` (type-7 quantiles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Gaps between successive 1-based occurrence indices; the first gap is the
/// first index itself.
pub fn inter_arrivals(occurrences: &[usize]) -> Vec<usize> {
    let mut prev = 0;
    occurrences
        .iter()
        .map(|&o| {
            let gap = o - prev;
            prev = o;
            gap
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSelection {
    pub pair: (usize, usize),
    pub icl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStudy {
    pub runs: usize,
    pub selections: Vec<RunSelection>,
    pub reference_pair: (usize, usize),
    /// 1-based run that produced the largest ICL.
    pub reference_run: usize,
    /// 1-based runs that selected the reference pair, increasing.
    pub occurrence_indices: Vec<usize>,
    pub inter_arrivals: Vec<usize>,
    pub inter_arrival_summary: Option<Summary>,
}

impl ReferenceStudy {
    /// Number of runs selecting each pair.
    pub fn pair_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut out = BTreeMap::new();
        for s in &self.selections {
            *out.entry(s.pair).or_insert(0) += 1;
        }
        out
    }

    /// Share of runs that found the reference pair.
    pub fn hit_rate(&self) -> f64 {
        self.occurrence_indices.len() as f64 / self.runs as f64
    }

    /// Rebuilds the study statistics from per-run selections.
    pub fn from_selections(selections: Vec<RunSelection>) -> Result<Self> {
        if selections.is_empty() {
            return Err(LbmError::InvalidParameter("runs must be at least 1".into()));
        }
        let mut best = 0;
        for (idx, s) in selections.iter().enumerate().skip(1) {
            if s.icl > selections[best].icl {
                best = idx;
            }
        }
        let reference_pair = selections[best].pair;
        let occurrence_indices: Vec<usize> = selections
            .iter()
            .enumerate()
            .filter(|(_, s)| s.pair == reference_pair)
            .map(|(idx, _)| idx + 1)
            .collect();
        let gaps = inter_arrivals(&occurrence_indices);
        let summary = summarize(&gaps.iter().map(|&x| x as f64).collect::<Vec<_>>());
        Ok(Self {
            runs: selections.len(),
            selections,
            reference_pair,
            reference_run: best + 1,
            occurrence_indices,
            inter_arrivals: gaps,
            inter_arrival_summary: summary,
        })
    }
}

/// Repeats single-restart model selection `runs` times; the reference pair is
/// the one selected by the run reaching the overall largest ICL.
pub fn reference_model_study(
    data: &BinaryDataMatrix,
    grid: Grid,
    prior: &PriorHyperparams,
    opts: &FitOptions,
    runs: usize,
    seed: u64,
) -> Result<ReferenceStudy> {
    if runs == 0 {
        return Err(LbmError::InvalidParameter("runs must be at least 1".into()));
    }
    let single = opts.with_restarts(1);
    let selections = (0..runs)
        .into_par_iter()
        .map(|k| {
            let sel = select_model(data, grid, prior, &single, derive_seed(seed, &[k as u64]))
                .map_err(|e| e.context(format!("run {}", k + 1)))?;
            Ok(RunSelection {
                pair: sel.best_pair,
                icl: sel.best_fit().icl_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ReferenceStudy::from_selections(selections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cells_are_row_major() {
        assert_eq!(
            Grid::new(2, 2).unwrap().cells(),
            vec![(1, 1), (1, 2), (2, 1), (2, 2)]
        );
        assert!(Grid::new(0, 3).is_err());
    }

    #[test]
    fn quantiles_follow_type_seven() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.mean, s.q3, s.max),
            (1.0, 1.75, 2.5, 2.5, 3.25, 4.0)
        );
        let s = summarize(&[5.0]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max),
            (5.0, 5.0, 5.0, 5.0, 5.0)
        );
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn inter_arrivals_start_from_first_index() {
        assert_eq!(inter_arrivals(&[3, 4, 10]), vec![3, 1, 6]);
        assert_eq!(inter_arrivals(&[]), Vec::<usize>::new());
    }

    #[test]
    fn constant_pair_gives_unit_gaps() {
        let sel = (0..6)
            .map(|k| RunSelection {
                pair: (3, 4),
                icl: -100.0 - k as f64,
            })
            .collect();
        let study = ReferenceStudy::from_selections(sel).unwrap();
        assert_eq!(study.reference_pair, (3, 4));
        assert_eq!(study.reference_run, 1);
        assert_eq!(study.inter_arrivals, vec![1; 6]);
        assert_eq!(study.hit_rate(), 1.0);
    }

    #[test]
    fn reference_is_max_icl_not_mode() {
        let sel = vec![
            RunSelection {
                pair: (2, 3),
                icl: -50.0,
            },
            RunSelection {
                pair: (4, 5),
                icl: -40.0,
            },
            RunSelection {
                pair: (2, 3),
                icl: -50.0,
            },
            RunSelection {
                pair: (4, 5),
                icl: -40.0,
            },
        ];
        let study = ReferenceStudy::from_selections(sel).unwrap();
        assert_eq!(study.reference_pair, (4, 5));
        assert_eq!(study.occurrence_indices, vec![2, 4]);
        assert_eq!(study.inter_arrivals, vec![2, 2]);
        assert_eq!(study.pair_counts()[&(2, 3)], 2);
    }

    #[test]
    fn tuning_record_tallies() {
        let rec = TuningRecord {
            epsilon: 0.3,
            stops: vec![
                StopTime {
                    t: 1,
                    censored: false,
                },
                StopTime {
                    t: 2,
                    censored: false,
                },
                StopTime {
                    t: 1,
                    censored: false,
                },
                StopTime {
                    t: 5,
                    censored: true,
                },
            ],
        };
        assert_eq!(rec.distribution(), BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(rec.censored(), 1);
        assert_eq!(rec.stopped_within(2), 3);
    }
}
