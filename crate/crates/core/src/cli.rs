//! Command-line front end. Every subcommand writes one JSON result file that
//! embeds its full configuration and master seed; no timestamps are written,
//! so identical invocations produce identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LbmError, Result};
use crate::evaluation::{robustness_experiment, RobustnessConfig, RobustnessReport};
use crate::inference::{fit, FitOptions, FitResult};
use crate::io::{export_reordered, load_matrix, write_matrix, write_text};
use crate::model::{simulate_dataset, staircase_parameters, PriorHyperparams};
use crate::selection::{
    reference_model_study, select_model, tune_restarts, Grid, ReferenceStudy, SelectionResult,
    TuningConfig,
};

#[derive(Debug, Parser)]
#[command(name = "lbm", version, about = "Binary latent block model toolkit")]
pub struct Cli {
    /// Worker threads (defaults to all cores); results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a staircase data set; writes the matrix CSV and a JSON record.
    Simulate(SimulateArgs),
    /// Fit one (g, m) model.
    Fit(FitArgs),
    /// ICL model selection over a grid.
    Select(SelectArgs),
    /// Restart-count tuning on simulated data.
    #[command(name = "tune-t")]
    TuneT(TuneArgs),
    /// Repeated single-restart selection to find a reference model.
    Refmodel(RefArgs),
    /// Subsampling robustness study on simulated data.
    Robustness(RobustnessArgs),
    /// Fit one model and export the block-reordered matrix and summary.
    Reorder(ReorderArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimationArgs {
    #[arg(long, default_value_t = 4.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long = "gibbs-sweeps", default_value_t = 50)]
    pub gibbs_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EstimationArgs {
    fn prior(&self) -> Result<PriorHyperparams> {
        PriorHyperparams::new(self.a, self.b)
    }

    fn fit_options(&self, restarts: usize) -> FitOptions {
        FitOptions {
            restarts,
            gibbs_sweeps: self.gibbs_sweeps,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long = "g-max", default_value_t = 7)]
    pub g_max: usize,
    #[arg(long = "m-max", default_value_t = 7)]
    pub m_max: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid> {
        Grid::new(self.g_max, self.m_max)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 137)]
    pub n: usize,
    #[arg(long, default_value_t = 33)]
    pub q: usize,
    /// Simulated (g, m).
    #[arg(long, default_value = "3,4", value_parser = parse_pair)]
    pub target: (usize, usize),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Matrix CSV; the JSON record goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub g: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub est: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub est: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TuneArgs {
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.15,0.2,0.25,0.3")]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub datasets: usize,
    #[arg(long, default_value = "3,4", value_parser = parse_pair)]
    pub target: (usize, usize),
    #[arg(long, default_value_t = 137)]
    pub n: usize,
    #[arg(long, default_value_t = 33)]
    pub q: usize,
    #[arg(long = "t-cap", default_value_t = 200)]
    pub t_cap: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub est: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RefArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub est: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RobustnessArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.2,0.25")]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub datasets: usize,
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100,120")]
    pub sizes: Vec<usize>,
    #[arg(long = "samples-per-size", default_value_t = 10)]
    pub samples_per_size: usize,
    #[arg(long, default_value = "3,4", value_parser = parse_pair)]
    pub target: (usize, usize),
    #[arg(long, default_value_t = 137)]
    pub n: usize,
    #[arg(long, default_value_t = 33)]
    pub q: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub est: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReorderArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub g: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub est: EstimationArgs,
    /// Reordered matrix CSV; the block summary goes to `<out>.summary.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `g,m`, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn one_based(labels: &[usize]) -> Vec<usize> {
    labels.iter().map(|&k| k + 1).collect()
}

fn fit_payload(f: &FitResult) -> Value {
    json!({
        "g": f.g,
        "m": f.m,
        "icl": f.icl_value,
        "free_energy": f.free_energy,
        "iterations": f.iterations,
        "restart_index": f.restart_index,
        "pi": f.params.pi,
        "rho": f.params.rho,
        "alpha": f.params.alpha_rows(),
        "z": one_based(&f.map_part.z),
        "w": one_based(&f.map_part.w),
    })
}

fn selection_payload(sel: &SelectionResult) -> Value {
    let best = sel.best_fit();
    let grid: Vec<Value> = sel
        .grid
        .iter()
        .map(|f| {
            json!({
                "g": f.g,
                "m": f.m,
                "icl": f.icl_value,
                "free_energy": f.free_energy,
                "iterations": f.iterations,
                "restart_index": f.restart_index,
            })
        })
        .collect();
    let mut v = fit_payload(best);
    let obj = v.as_object_mut().expect("object");
    obj.insert("best_g".into(), json!(sel.best_pair.0));
    obj.insert("best_m".into(), json!(sel.best_pair.1));
    obj.insert(
        "best_pair".into(),
        json!([sel.best_pair.0, sel.best_pair.1]),
    );
    obj.insert("grid".into(), Value::Array(grid));
    v
}

fn reference_payload(study: &ReferenceStudy) -> Value {
    let counts: Vec<Value> = study
        .pair_counts()
        .iter()
        .map(|(&(g, m), &c)| json!({"g": g, "m": m, "count": c}))
        .collect();
    let summary = study.inter_arrival_summary.map(|s| {
        json!({"min": s.min, "q1": s.q1, "median": s.median, "mean": s.mean, "q3": s.q3, "max": s.max})
    });
    json!({
        "best_g": study.reference_pair.0,
        "best_m": study.reference_pair.1,
        "icl": study.selections[study.reference_run - 1].icl,
        "reference_run": study.reference_run,
        "runs": study.runs,
        "occurrences": study.occurrence_indices,
        "hit_rate": study.hit_rate(),
        "inter_arrivals": study.inter_arrivals,
        "inter_arrival_summary": summary,
        "pair_counts": counts,
        "selected": study.selections.iter().map(|s| json!([s.pair.0, s.pair.1, s.icl])).collect::<Vec<_>>(),
    })
}

fn robustness_payload(report: &RobustnessReport, epsilons: &[f64], sizes: &[usize]) -> Value {
    let mut cells = Vec::new();
    for &eps in epsilons {
        for &n in sizes {
            let pairs: Vec<Value> = report
                .pair_distribution(eps, n)
                .iter()
                .map(|(&(g, m), &c)| json!({"g": g, "m": m, "count": c}))
                .collect();
            let mut g_hats: Vec<usize> = report
                .outcomes
                .iter()
                .filter(|o| o.epsilon == eps && o.n == n)
                .map(|o| o.pair.0)
                .collect();
            g_hats.sort_unstable();
            g_hats.dedup();
            let rates: Vec<Value> = g_hats
                .iter()
                .map(|&gh| json!({"g_hat": gh, "rates": report.rates(eps, n, gh)}))
                .collect();
            cells.push(json!({"epsilon": eps, "n": n, "pairs": pairs, "rates": rates}));
        }
    }
    let datasets: Vec<Value> = report
        .datasets
        .iter()
        .map(|d| json!({"epsilon": d.epsilon, "dataset": d.dataset, "rejected": d.rejected, "pi": d.proportions}))
        .collect();
    let samples: Vec<Value> = report
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "epsilon": o.epsilon, "dataset": o.dataset, "n": o.n, "sample": o.sample,
                "g": o.pair.0, "m": o.pair.1, "misclassified": o.misclassified, "rate": o.rate,
            })
        })
        .collect();
    json!({"cells": cells, "datasets": datasets, "samples": samples})
}

fn write_json(
    path: &Path,
    command: &str,
    seed: u64,
    config: &impl Serialize,
    mut payload: Value,
) -> Result<()> {
    let obj = payload.as_object_mut().expect("object payload");
    obj.insert("command".into(), json!(command));
    obj.insert("seed".into(), json!(seed));
    obj.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    let mut text = serde_json::to_string_pretty(&payload).expect("payload serializes");
    text.push('\n');
    write_text(path, &text)
}

fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.txt");
    PathBuf::from(s)
}

/// Runs one parsed command and returns a one-line report for stdout.
pub fn run_command(command: &Command) -> Result<String> {
    match command {
        Command::Simulate(args) => {
            let params = staircase_parameters(args.target.0, args.target.1, args.epsilon)?;
            let (data, part) = simulate_dataset(&params, args.n, args.q, args.seed)?;
            write_matrix(&data, &args.out)?;
            let payload = json!({
                "pi": params.pi,
                "rho": params.rho,
                "alpha": params.alpha_rows(),
                "z": one_based(&part.z),
                "w": one_based(&part.w),
            });
            let record = args.out.with_extension("json");
            write_json(&record, "simulate", args.seed, args, payload)?;
            Ok(format!(
                "simulated {}x{} matrix -> {} ({})",
                args.n,
                args.q,
                args.out.display(),
                record.display()
            ))
        }
        Command::Fit(args) => {
            let data = load_matrix(&args.data)?;
            let f = fit(
                &data,
                args.g,
                args.m,
                &args.est.prior()?,
                &args.est.fit_options(args.restarts),
                args.est.seed,
            )?;
            write_json(&args.out, "fit", args.est.seed, args, fit_payload(&f))?;
            Ok(format!(
                "fit ({}, {}): free energy {:.4}, ICL {:.4}",
                f.g, f.m, f.free_energy, f.icl_value
            ))
        }
        Command::Select(args) => {
            let data = load_matrix(&args.data)?;
            let sel = select_model(
                &data,
                args.grid.grid()?,
                &args.est.prior()?,
                &args.est.fit_options(args.restarts),
                args.est.seed,
            )?;
            write_json(
                &args.out,
                "select",
                args.est.seed,
                args,
                selection_payload(&sel),
            )?;
            Ok(format!(
                "selected ({}, {}) with ICL {:.4}",
                sel.best_pair.0,
                sel.best_pair.1,
                sel.best_fit().icl_value
            ))
        }
        Command::TuneT(args) => {
            let config = TuningConfig {
                epsilons: args.epsilon.clone(),
                datasets_per_eps: args.datasets,
                n: args.n,
                q: args.q,
                target: args.target,
                grid: args.grid.grid()?,
                prior: args.est.prior()?,
                fit: args.est.fit_options(1),
                t_cap: args.t_cap,
            };
            let records = tune_restarts(&config, args.est.seed)?;
            let table: Vec<Value> = records
                .iter()
                .map(|r| {
                    json!({
                        "epsilon": r.epsilon,
                        "t_values": r.stops.iter().map(|s| s.t).collect::<Vec<_>>(),
                        "censored": r.stops.iter().map(|s| s.censored).collect::<Vec<_>>(),
                        "distribution": r.distribution(),
                        "censored_count": r.censored(),
                    })
                })
                .collect();
            let mut lines: BTreeMap<String, usize> = BTreeMap::new();
            for r in &records {
                lines.insert(format!("{}", r.epsilon), r.stopped_within(1));
            }
            write_json(
                &args.out,
                "tune-t",
                args.est.seed,
                args,
                json!({ "records": table }),
            )?;
            Ok(format!("T=1 successes per epsilon: {lines:?}"))
        }
        Command::Refmodel(args) => {
            let data = load_matrix(&args.data)?;
            let study = reference_model_study(
                &data,
                args.grid.grid()?,
                &args.est.prior()?,
                &args.est.fit_options(1),
                args.runs,
                args.est.seed,
            )?;
            write_json(
                &args.out,
                "refmodel",
                args.est.seed,
                args,
                reference_payload(&study),
            )?;
            Ok(format!(
                "reference pair {:?} found in {} of {} runs",
                study.reference_pair,
                study.occurrence_indices.len(),
                study.runs
            ))
        }
        Command::Robustness(args) => {
            let config = RobustnessConfig {
                epsilons: args.epsilon.clone(),
                datasets_per_eps: args.datasets,
                n: args.n,
                q: args.q,
                target: args.target,
                sizes: args.sizes.clone(),
                samples_per_size: args.samples_per_size,
                grid: args.grid.grid()?,
                prior: args.est.prior()?,
                fit: args.est.fit_options(1),
                ..RobustnessConfig::default()
            };
            let report = robustness_experiment(&config, args.est.seed)?;
            let payload = robustness_payload(&report, &args.epsilon, &args.sizes);
            write_json(&args.out, "robustness", args.est.seed, args, payload)?;
            Ok(format!("{} subsample selections", report.outcomes.len()))
        }
        Command::Reorder(args) => {
            let data = load_matrix(&args.data)?;
            let f = fit(
                &data,
                args.g,
                args.m,
                &args.est.prior()?,
                &args.est.fit_options(args.restarts),
                args.est.seed,
            )?;
            let summary = summary_path(&args.out);
            export_reordered(&data, &f, &args.out, &summary)?;
            Ok(format!(
                "reordered matrix -> {}, summary -> {}",
                args.out.display(),
                summary.display()
            ))
        }
    }
}

/// Sizes the thread pool and runs the parsed command.
pub fn execute(cli: &Cli) -> Result<String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(LbmError::InvalidParameter(
                "--threads must be at least 1".into(),
            ));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| LbmError::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_command(&cli.command))
}

/// Parses `args` (program name first) and executes them.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| LbmError::InvalidParameter(e.to_string()))?;
    execute(&cli)
}

pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            println!("{report}");
            std::process::ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
