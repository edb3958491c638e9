//! The `nphc` command line.
//!
//! Every option can also be given in a `--config` file (see [`crate::io`]
//! for the grammar) under the same name with `_` for `-`; flags win over the
//! file. Output files are deterministic given the inputs and seed, except
//! `timing.json`, which holds wall-clock times.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cumulants::{estimate_cumulants, scan_half_widths, BoundaryMode, CumulantConfig, IntegratedCumulants};
use crate::error::{NphcError, Result};
use crate::estimator::{solve, SolveResult};
use crate::experiment::{self, ExperimentConfig, Preset};
use crate::io::{self, ConfigFile, EventFormat, IngestOptions};
use crate::linalg::Matrix;
use crate::metrics::{mean_rank_corr, rel_err};
use crate::simulate::{simulate, BlockLayout, Parent};

#[derive(Debug, Parser)]
#[command(name = "nphc", version, about = "Non-parametric Hawkes kernel-integral estimation from integrated cumulants")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a block benchmark model; writes events.csv, G.csv, mu.csv, model.json.
    Simulate(SimulateArgs),
    /// Estimate integrated cumulants; writes lambda.csv, C.csv, Kc.csv, cumulants.json.
    Cumulants(CumulantsArgs),
    /// Fit G from cumulants; writes G_hat.csv, mu_hat.csv, R_hat.csv, loss_trace.csv, fit.json.
    Fit(FitArgs),
    /// Score an estimate against the truth; prints one JSON line.
    Eval(EvalArgs),
    /// Simulate, estimate, fit and score a preset end to end.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// rect10, plaw10, exp10, exp100 or custom.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Baseline intensity of every node.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Kernel integral on the blocks.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Time scale of the lower block; the square and upper blocks use 10x and 100x.
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Rectangular delay / power-law exponent.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Block group sizes, e.g. 3,3,4.
    #[arg(long)]
    pub groups: Option<String>,
    /// Mean number of events per node (sets the horizon).
    #[arg(long)]
    pub events_per_node: Option<f64>,
    /// Explicit horizon; overrides --events-per-node.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Kernel mass below which old events leave the simulated history.
    #[arg(long)]
    pub tail_tolerance: Option<f64>,
    #[arg(long)]
    pub max_events: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowArgs {
    /// Window half-width H.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// trimmed or paper_exact.
    #[arg(long)]
    pub mode: Option<BoundaryMode>,
    /// Use the (i,i,j) pattern only for the skewness.
    #[arg(long)]
    pub no_symmetrize: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub adagrad_epsilon: Option<f64>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Fixed weight of the covariance term instead of the norm ratio.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub trace_stride: Option<usize>,
    /// Restarts from random orthogonal starting points (not implemented; must be 0).
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also write ancestry.csv with the direct parent of every event.
    #[arg(long)]
    pub ancestry: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CumulantsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Event file (CSV `node_id,timestamp` or JSON Lines).
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// csv or jsonl; guessed from the extension by default.
    #[arg(long)]
    pub format: Option<EventFormat>,
    /// Observation horizon; defaults to the last timestamp.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of nodes; defaults to the largest node id plus one.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Comma-separated half-widths: print a table of Ĉ against H instead.
    #[arg(long)]
    pub scan_h: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory written by `nphc cumulants`.
    #[arg(long)]
    pub cumulants: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Zero out entries of Ĝ with |ĝ| below this value in G_hat.csv.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// Runtime to report; defaults to timing.json next to the estimate.
    #[arg(long)]
    pub runtime: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Number of independent runs (seeds seed, seed+1, ...).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Write matrices and a JSON summary of the median run here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "preset", "mu", "alpha", "beta0", "gamma", "groups", "events_per_node", "horizon", "seed",
    "tail_tolerance", "max_events", "half_width", "mode", "symmetrize", "max_iters",
    "learning_rate", "adagrad_epsilon", "grad_tol", "kappa", "trace_stride", "restarts", "runs",
    "out", "events", "format", "nodes", "scan_h", "cumulants", "threshold", "truth", "estimate",
    "runtime", "ancestry",
];

/// Flag values backed by an optional config file.
struct Settings {
    file: ConfigFile,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some((key, line)) = file.unknown_keys(KNOWN_KEYS).into_iter().next() {
            return Err(NphcError::Parse {
                line,
                message: format!("unknown config key '{key}'"),
            });
        }
        Ok(Self { file })
    }

    fn get<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key),
        }
    }

    fn or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    fn switch(&self, key: &str, flag: bool) -> Result<bool> {
        Ok(flag || self.file.get::<bool>(key)?.unwrap_or(false))
    }

    fn required<T>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key, flag)?
            .ok_or_else(|| NphcError::InvalidParameter(format!("--{} is required", key.replace('_', "-"))))
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| NphcError::InvalidParameter(format!("{key}: cannot parse '{}'", s.trim())))
        })
        .collect()
}

fn experiment_config(
    s: &Settings,
    model: &ModelArgs,
    window: &WindowArgs,
    solver: &SolverArgs,
    runs: Option<usize>,
) -> Result<ExperimentConfig> {
    let preset = s.or("preset", model.preset, Preset::Rect10)?;
    let mut cfg = ExperimentConfig::preset(preset);
    let m = &mut cfg.model;
    m.mu = s.or("mu", model.mu, m.mu)?;
    m.alpha = s.or("alpha", model.alpha, m.alpha)?;
    if let Some(b0) = s.get("beta0", model.beta0)? {
        m.betas = [b0, 10.0 * b0, 100.0 * b0];
    }
    m.gamma = s.or("gamma", model.gamma, m.gamma)?;
    if let Some(text) = s.get::<String>("groups", model.groups.clone())? {
        let sizes: Vec<usize> = parse_list("groups", &text)?;
        let sizes: [usize; 3] = sizes
            .try_into()
            .map_err(|_| NphcError::InvalidParameter("groups needs exactly three sizes".into()))?;
        m.layout = BlockLayout { group_sizes: sizes };
    }
    cfg.events_per_node = s.or("events_per_node", model.events_per_node, cfg.events_per_node)?;
    cfg.horizon = s.get("horizon", model.horizon)?;
    cfg.seed = s.or("seed", model.seed, cfg.seed)?;
    cfg.tail_tolerance = s.or("tail_tolerance", model.tail_tolerance, cfg.tail_tolerance)?;
    cfg.max_events = s.or("max_events", model.max_events, cfg.max_events)?;
    cfg.runs = s.or("runs", runs, cfg.runs)?;
    cfg.cumulants = cumulant_config(s, window, cfg.cumulants.half_width)?;
    apply_solver(s, solver, &mut cfg.solver)?;
    cfg.solver.seed = cfg.seed;
    Ok(cfg)
}

fn cumulant_config(s: &Settings, w: &WindowArgs, default_h: f64) -> Result<CumulantConfig> {
    let symmetrize = if w.no_symmetrize {
        false
    } else {
        s.file.get::<bool>("symmetrize")?.unwrap_or(true)
    };
    Ok(CumulantConfig::new(s.or("half_width", w.half_width, default_h)?)
        .with_mode(s.or("mode", w.mode, BoundaryMode::default())?)
        .with_symmetrize(symmetrize))
}

fn apply_solver(s: &Settings, a: &SolverArgs, cfg: &mut crate::estimator::SolveConfig) -> Result<()> {
    cfg.max_iters = s.or("max_iters", a.max_iters, cfg.max_iters)?;
    cfg.learning_rate = s.or("learning_rate", a.learning_rate, cfg.learning_rate)?;
    cfg.adagrad_epsilon = s.or("adagrad_epsilon", a.adagrad_epsilon, cfg.adagrad_epsilon)?;
    cfg.grad_tol = s.or("grad_tol", a.grad_tol, cfg.grad_tol)?;
    cfg.kappa_override = s.get("kappa", a.kappa)?.or(cfg.kappa_override);
    cfg.trace_stride = s.or("trace_stride", a.trace_stride, cfg.trace_stride)?;
    let restarts: usize = s.or("restarts", a.restarts, 0)?;
    if restarts != 0 {
        return Err(NphcError::InvalidParameter(
            "random orthogonal restarts are not implemented; use --restarts 0".into(),
        ));
    }
    cfg.validate()
}

/// Caps the rayon pool from `NPHC_THREADS`.
pub fn init_thread_pool() -> Result<()> {
    let Ok(value) = std::env::var("NPHC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| NphcError::InvalidParameter(format!("NPHC_THREADS must be a positive integer, got '{value}'")))?;
    // A second initialisation in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs a parsed command line, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    init_thread_pool()?;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Cumulants(a) => cmd_cumulants(a, stdout),
        Command::Fit(a) => cmd_fit(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Experiment(a) => cmd_experiment(a, stdout),
    }
}

/// JSON object describing an error, for stderr.
pub fn error_json(err: &NphcError) -> String {
    json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    })
    .to_string()
}

fn say(out: &mut dyn std::io::Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| NphcError::io("<stdout>", e))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelManifest {
    pub config: ExperimentConfig,
    pub horizon: f64,
    pub events_per_node: Vec<usize>,
    pub truncated: bool,
    pub candidates: usize,
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let s = Settings::load(a.config.as_deref())?;
    let cfg = experiment_config(&s, &a.model, &WindowArgs::default(), &SolverArgs::default(), None)?;
    let dir: PathBuf = s.required("out", a.out)?;
    let ancestry = s.switch("ancestry", a.ancestry)?;
    let model = cfg.build_model()?;
    let horizon = cfg.resolve_horizon(&model)?;
    let mut sim_cfg = cfg.simulation_config(horizon, cfg.seed);
    sim_cfg.track_ancestry = ancestry;
    let sim = simulate(&model, &sim_cfg)?;

    io::write_events(&dir.join("events.csv"), &sim.events)?;
    io::write_matrix(&dir.join("G.csv"), &model.integral_matrix())?;
    io::write_vector(&dir.join("mu.csv"), &model.mu_vector())?;
    if let Some(anc) = &sim.ancestry {
        let mut text = String::from("node_id,index,parent_node,parent_index\n");
        for (i, parents) in anc.iter().enumerate() {
            for (k, p) in parents.iter().enumerate() {
                match p {
                    Parent::Baseline => text.push_str(&format!("{i},{k},,\n")),
                    Parent::Event { node, index } => text.push_str(&format!("{i},{k},{node},{index}\n")),
                }
            }
        }
        io::write_text(&dir.join("ancestry.csv"), &text)?;
    }
    let manifest = ModelManifest {
        config: cfg,
        horizon,
        events_per_node: sim.events.counts(),
        truncated: sim.truncated,
        candidates: sim.candidates,
    };
    io::write_json(&dir.join("model.json"), &manifest)?;
    say(
        out,
        &format!(
            "simulated {} events on {} nodes over T = {horizon}{}\n",
            sim.events.total_events(),
            sim.events.dim(),
            if sim.truncated { " (truncated at max_events)" } else { "" }
        ),
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CumulantManifest {
    pub half_width: f64,
    pub horizon: f64,
    pub boundary_mode: BoundaryMode,
    pub symmetrize: bool,
    pub dim: usize,
    pub events_per_node: Vec<usize>,
}

fn cmd_cumulants(a: CumulantsArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let s = Settings::load(a.config.as_deref())?;
    let path: PathBuf = s.required("events", a.events)?;
    let format = s.get("format", a.format)?.unwrap_or_else(|| EventFormat::from_path(&path));
    let opts = IngestOptions {
        horizon: s.get("horizon", a.horizon)?,
        nodes: s.get("nodes", a.nodes)?,
    };
    let events = io::read_events(&path, format, opts)?;

    if let Some(list) = s.get::<String>("scan_h", a.scan_h)? {
        let hs: Vec<f64> = parse_list("scan_h", &list)?;
        let mode = s.or("mode", a.window.mode, BoundaryMode::default())?;
        let table = scan_half_widths(&events, &hs, mode)?;
        let d = events.dim() as f64;
        let mut text = format!("{:>14} {:>16} {:>16}\n", "H", "mean diag C", "mean offdiag C");
        let mut csv = String::from("half_width,i,j,c\n");
        for (h, c) in &table {
            let diag = c.diagonal().sum();
            let off = c.sum() - diag;
            let n_off = (d * (d - 1.0)).max(1.0);
            text.push_str(&format!("{:>14} {:>16.6e} {:>16.6e}\n", h, diag / d, off / n_off));
            for i in 0..c.nrows() {
                for j in 0..c.ncols() {
                    csv.push_str(&format!("{},{i},{j},{}\n", io::fmt_f64(*h), io::fmt_f64(c[(i, j)])));
                }
            }
        }
        if let Some(dir) = s.get::<PathBuf>("out", a.out)? {
            io::write_text(&dir.join("scan.csv"), &csv)?;
        }
        return say(out, &text);
    }

    let dir: PathBuf = s.required("out", a.out)?;
    let half_width = s.required("half_width", a.window.half_width)?;
    let cfg = cumulant_config(&s, &a.window, half_width)?;
    let cum = estimate_cumulants(&events, &cfg)?;
    write_cumulants(&dir, &cum)?;
    let manifest = CumulantManifest {
        half_width: cfg.half_width,
        horizon: events.horizon(),
        boundary_mode: cfg.boundary_mode,
        symmetrize: cfg.symmetrize,
        dim: events.dim(),
        events_per_node: events.counts(),
    };
    io::write_json(&dir.join("cumulants.json"), &manifest)?;
    say(
        out,
        &format!(
            "cumulants of {} nodes ({} events), H = {}, mode {}\n",
            events.dim(),
            events.total_events(),
            cfg.half_width,
            cfg.boundary_mode.name()
        ),
    )
}

fn write_cumulants(dir: &Path, cum: &IntegratedCumulants) -> Result<()> {
    io::write_vector(&dir.join("lambda.csv"), &cum.lambda)?;
    io::write_matrix(&dir.join("C.csv"), &cum.c)?;
    io::write_matrix(&dir.join("Kc.csv"), &cum.kc)
}

fn read_cumulants(dir: &Path) -> Result<IntegratedCumulants> {
    let lambda = io::read_vector(&dir.join("lambda.csv"))?;
    let c = io::read_matrix(&dir.join("C.csv"))?;
    let kc = io::read_matrix(&dir.join("Kc.csv"))?;
    let mut cum = IntegratedCumulants::from_parts(lambda, c, kc)?;
    let manifest = dir.join("cumulants.json");
    if manifest.exists() {
        let m: CumulantManifest = io::read_json(&manifest)?;
        cum.half_width = m.half_width;
        cum.horizon = m.horizon;
    }
    Ok(cum)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitManifest {
    pub solver: crate::estimator::SolveConfig,
    pub threshold: Option<f64>,
    pub kappa: f64,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub condition_number_r: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub clipped_eigenvalues: usize,
}

fn thresholded(g: &Matrix, threshold: Option<f64>) -> Matrix {
    match threshold {
        Some(t) => g.map(|x| if x.abs() < t { 0.0 } else { x }),
        None => g.clone(),
    }
}

fn write_fit(dir: &Path, fit: &SolveResult, threshold: Option<f64>) -> Result<()> {
    io::write_matrix(&dir.join("G_hat.csv"), &thresholded(&fit.g_hat, threshold))?;
    io::write_matrix(&dir.join("R_hat.csv"), &fit.r_hat)?;
    io::write_vector(&dir.join("mu_hat.csv"), &fit.mu_hat)?;
    let mut trace = String::from("iteration,loss\n");
    for (it, l) in &fit.loss_trace {
        trace.push_str(&format!("{it},{}\n", io::fmt_f64(*l)));
    }
    io::write_text(&dir.join("loss_trace.csv"), &trace)
}

fn fit_manifest(solver: &crate::estimator::SolveConfig, fit: &SolveResult, threshold: Option<f64>) -> FitManifest {
    FitManifest {
        solver: solver.clone(),
        threshold,
        kappa: fit.kappa,
        final_loss: fit.final_loss(),
        final_grad_norm: fit.final_grad_norm,
        condition_number_r: fit.condition_number_r,
        iterations_used: fit.iterations_used,
        converged: fit.converged,
        clipped_eigenvalues: fit.clipped_eigenvalues,
    }
}

fn cmd_fit(a: FitArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let s = Settings::load(a.config.as_deref())?;
    let input: PathBuf = s.required("cumulants", a.cumulants)?;
    let dir: PathBuf = s.required("out", a.out)?;
    let threshold = s.get("threshold", a.threshold)?;
    if let Some(t) = threshold {
        if !(t >= 0.0) {
            return Err(NphcError::InvalidParameter(format!("threshold must be >= 0, got {t}")));
        }
    }
    let mut solver = ExperimentConfig::preset(Preset::Custom).solver;
    apply_solver(&s, &a.solver, &mut solver)?;
    solver.seed = s.or("seed", a.seed, 0)?;
    let cum = read_cumulants(&input)?;
    let fit = solve(&cum, &solver)?;
    write_fit(&dir, &fit, threshold)?;
    io::write_json(&dir.join("fit.json"), &fit_manifest(&solver, &fit, threshold))?;
    io::write_json(&dir.join("timing.json"), &json!({ "solve_secs": fit.elapsed_secs }))?;
    say(
        out,
        &format!(
            "fit d = {}: {} iterations, loss {:.6e}, kappa {:.4}{}\n",
            cum.dim(),
            fit.iterations_used,
            fit.final_loss(),
            fit.kappa,
            if fit.converged { "" } else { " (max_iters reached)" }
        ),
    )
}

/// The one-line JSON record printed by `nphc eval`.
pub fn eval_record(truth: &Matrix, estimate: &Matrix, runtime: Option<f64>) -> Result<String> {
    let re = rel_err(truth, estimate)?;
    let rc = mean_rank_corr(truth, estimate)?;
    Ok(json!({ "rel_err": re, "mean_rank_corr": rc, "runtime_secs": runtime }).to_string())
}

fn cmd_eval(a: EvalArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let s = Settings::load(a.config.as_deref())?;
    let truth_path: PathBuf = s.required("truth", a.truth)?;
    let est_path: PathBuf = s.required("estimate", a.estimate)?;
    let truth = io::read_matrix(&truth_path)?;
    let estimate = io::read_matrix(&est_path)?;
    let runtime = match s.get("runtime", a.runtime)? {
        Some(r) => Some(r),
        None => {
            let timing = est_path.with_file_name("timing.json");
            if timing.exists() {
                let v: serde_json::Value = io::read_json(&timing)?;
                ["total_secs", "solve_secs"].iter().find_map(|k| v.get(*k).and_then(|x| x.as_f64()))
            } else {
                None
            }
        }
    };
    say(out, &(eval_record(&truth, &estimate, runtime)? + "\n"))
}

#[derive(Debug, Serialize, Deserialize)]
struct RunSummary {
    seed: u64,
    horizon: f64,
    events_per_node: Vec<usize>,
    truncated: bool,
    rel_err: f64,
    mean_rank_corr: f64,
    iterations_used: usize,
    kappa: f64,
    final_loss: f64,
}

fn cmd_experiment(a: ExperimentArgs, out: &mut dyn std::io::Write) -> Result<()> {
    let s = Settings::load(a.config.as_deref())?;
    let cfg = experiment_config(&s, &a.model, &a.window, &a.solver, a.runs)?;
    let out_dir = s.get::<PathBuf>("out", a.out)?;
    let start = Instant::now();
    let report = experiment::run(&cfg)?;
    let total = start.elapsed().as_secs_f64();
    let median = report.median_run();

    let mut text = experiment::summary_table(&report);
    text.push_str(&format!("\nmedian run (seed {}):\n", median.seed));
    text.push_str(&experiment::heatmap_pair(&median.g_true, &median.fit.g_hat));
    text.push_str(&format!("\nwall time {total:.2} s\n"));
    say(out, &text)?;

    if let Some(dir) = out_dir {
        io::write_matrix(&dir.join("G.csv"), &median.g_true)?;
        write_cumulants(&dir, &median.cumulants)?;
        write_fit(&dir, &median.fit, None)?;
        io::write_vector(&dir.join("mu.csv"), &DVector::from_element(cfg.model.dim, cfg.model.mu))?;
        let runs: Vec<RunSummary> = report
            .runs
            .iter()
            .map(|r| RunSummary {
                seed: r.seed,
                horizon: r.horizon,
                events_per_node: r.events_per_node.clone(),
                truncated: r.truncated,
                rel_err: r.rel_err,
                mean_rank_corr: r.mean_rank_corr,
                iterations_used: r.fit.iterations_used,
                kappa: r.fit.kappa,
                final_loss: r.fit.final_loss(),
            })
            .collect();
        io::write_json(
            &dir.join("summary.json"),
            &json!({
                "config": cfg,
                "median_rel_err": report.median_rel_err,
                "median_mean_rank_corr": report.median_mean_rank_corr,
                "median_seed": median.seed,
                "runs": runs,
            }),
        )?;
        let timings: Vec<_> = report.runs.iter().map(|r| json!({ "seed": r.seed, "timings": r.timings })).collect();
        io::write_json(
            &dir.join("timing.json"),
            &json!({ "total_secs": total, "solve_secs": median.timings.solve, "runs": timings }),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("nphc").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.conf");
        std::fs::write(&cfg_path, "preset = exp10\nmu = 0.002\nhalf_width = 50\nseed = 3\n").unwrap();
        let cli = parse(&["experiment", "--config", cfg_path.to_str().unwrap(), "--mu", "0.004"]);
        let Command::Experiment(a) = cli.command else { panic!() };
        let s = Settings::load(a.config.as_deref()).unwrap();
        let cfg = experiment_config(&s, &a.model, &a.window, &a.solver, a.runs).unwrap();
        assert_eq!(cfg.preset, Preset::Exp10);
        assert_eq!(cfg.model.mu, 0.004);
        assert_eq!(cfg.cumulants.half_width, 50.0);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.solver.seed, 3);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.conf");
        std::fs::write(&p, "mu = 1\nbogus = 2\n").unwrap();
        assert!(matches!(Settings::load(Some(&p)), Err(NphcError::Parse { line: 2, .. })));
    }

    #[test]
    fn restarts_stub_is_rejected() {
        let s = Settings::load(None).unwrap();
        let mut cfg = crate::estimator::SolveConfig::default();
        let a = SolverArgs {
            restarts: Some(2),
            ..SolverArgs::default()
        };
        assert!(apply_solver(&s, &a, &mut cfg).is_err());
    }

    #[test]
    fn error_json_is_machine_readable() {
        let e = NphcError::InvalidParameter("x".into());
        let v: serde_json::Value = serde_json::from_str(&error_json(&e)).unwrap();
        assert_eq!(v["error"], "InvalidParameter");
        assert_eq!(v["exit_code"], 2);
    }

    #[test]
    fn eval_identity_record() {
        let g = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 + 1.0);
        let v: serde_json::Value = serde_json::from_str(&eval_record(&g, &g, None).unwrap()).unwrap();
        assert_eq!(v["rel_err"], 0.0);
        assert_eq!(v["mean_rank_corr"], 1.0);
    }
}
