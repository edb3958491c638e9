//! End-to-end benchmark runs: simulate a block model, estimate cumulants,
//! fit, score.
//!
//! Presets fix the kernel shape and dimension; everything else (baseline,
//! sample size, window, solver) is a field of [`ExperimentConfig`] with the
//! same defaults for every shape. The horizon is derived from the requested
//! number of events per node and the stationary mean intensity.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::{estimate_cumulants, CumulantConfig, IntegratedCumulants};
use crate::error::{NphcError, Result};
use crate::estimator::{solve, SolveConfig, SolveResult};
use crate::linalg::Matrix;
use crate::metrics::{mean_rank_corr, rel_err};
use crate::model::{theoretical_mean_intensity, HawkesModel, KernelShape};
use crate::simulate::{simulate, BlockModelSpec, Simulation, SimulationConfig};

/// Baseline of every node. Small enough that a window of width `2H` rarely
/// holds events from two unrelated clusters.
pub const DEFAULT_MU: f64 = 1e-6;
/// Events per node for the `d = 10` presets.
pub const DEFAULT_EVENTS_PER_NODE: f64 = 1e6;
/// Events per node for `exp100`.
pub const DEFAULT_EVENTS_PER_NODE_D100: f64 = 1e5;
pub const DEFAULT_HALF_WIDTH: f64 = 1e4;
/// Power-law tails are dropped from the simulated history once their
/// remaining mass is below this fraction.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Rect10,
    Plaw10,
    Exp10,
    Exp100,
    Custom,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Rect10 => "rect10",
            Preset::Plaw10 => "plaw10",
            Preset::Exp10 => "exp10",
            Preset::Exp100 => "exp100",
            Preset::Custom => "custom",
        }
    }

    /// Kernel shape and dimension; `Custom` starts from the exponential `d = 10` model.
    pub fn shape_and_dim(self) -> (KernelShape, usize) {
        match self {
            Preset::Rect10 => (KernelShape::Rectangular, 10),
            Preset::Plaw10 => (KernelShape::PowerLaw, 10),
            Preset::Exp10 | Preset::Custom => (KernelShape::Exponential, 10),
            Preset::Exp100 => (KernelShape::Exponential, 100),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = NphcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect10" => Ok(Preset::Rect10),
            "plaw10" => Ok(Preset::Plaw10),
            "exp10" => Ok(Preset::Exp10),
            "exp100" => Ok(Preset::Exp100),
            "custom" => Ok(Preset::Custom),
            other => Err(NphcError::InvalidParameter(format!(
                "unknown preset '{other}' (expected rect10, plaw10, exp10, exp100 or custom)"
            ))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub model: BlockModelSpec,
    /// Target mean number of events per node; sets the horizon unless
    /// `horizon` is given.
    pub events_per_node: f64,
    pub horizon: Option<f64>,
    /// Seed of the first run; run `k` uses `seed + k`.
    pub seed: u64,
    pub runs: usize,
    pub tail_tolerance: f64,
    pub max_events: usize,
    pub cumulants: CumulantConfig,
    pub solver: SolveConfig,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (shape, dim) = preset.shape_and_dim();
        Self {
            preset,
            model: BlockModelSpec::preset(dim, shape, DEFAULT_MU),
            events_per_node: if dim >= 100 {
                DEFAULT_EVENTS_PER_NODE_D100
            } else {
                DEFAULT_EVENTS_PER_NODE
            },
            horizon: None,
            seed: 0,
            runs: 1,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            max_events: 50_000_000,
            cumulants: CumulantConfig::new(DEFAULT_HALF_WIDTH),
            solver: SolveConfig {
                trace_stride: 100,
                ..SolveConfig::default()
            },
        }
    }

    pub fn build_model(&self) -> Result<HawkesModel> {
        self.model.build()
    }

    /// `events_per_node / mean(Λ)` unless an explicit horizon is set.
    pub fn resolve_horizon(&self, model: &HawkesModel) -> Result<f64> {
        if let Some(t) = self.horizon {
            return Ok(t);
        }
        let lambda = theoretical_mean_intensity(model)?;
        let mean = lambda.mean();
        if !(mean > 0.0) {
            return Err(NphcError::InvalidParameter(
                "mean intensity is zero; set the horizon explicitly".into(),
            ));
        }
        Ok(self.events_per_node / mean)
    }

    pub fn simulation_config(&self, horizon: f64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            max_events: self.max_events,
            tail_tolerance: self.tail_tolerance,
            ..SimulationConfig::new(horizon, seed)
        }
    }

    /// Checks every downstream precondition; returns the model and horizon.
    pub fn validate(&self) -> Result<(HawkesModel, f64)> {
        if self.runs == 0 {
            return Err(NphcError::InvalidParameter("runs must be >= 1".into()));
        }
        if self.horizon.is_none() && !(self.events_per_node.is_finite() && self.events_per_node > 0.0) {
            return Err(NphcError::InvalidParameter(format!(
                "events_per_node must be > 0, got {}",
                self.events_per_node
            )));
        }
        let model = self.build_model()?;
        let horizon = self.resolve_horizon(&model)?;
        self.simulation_config(horizon, self.seed).validate()?;
        self.cumulants.validate(horizon)?;
        self.solver.validate()?;
        Ok((model, horizon))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub simulate: f64,
    pub cumulants: f64,
    pub solve: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.simulate + self.cumulants + self.solve
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub horizon: f64,
    pub events_per_node: Vec<usize>,
    pub truncated: bool,
    pub g_true: Matrix,
    pub cumulants: IntegratedCumulants,
    pub fit: SolveResult,
    pub rel_err: f64,
    pub mean_rank_corr: f64,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunReport>,
    pub median_rel_err: f64,
    pub median_mean_rank_corr: f64,
}

impl ExperimentReport {
    /// The run whose RelErr is the median (lower middle for an even count).
    pub fn median_run(&self) -> &RunReport {
        let mut idx: Vec<usize> = (0..self.runs.len()).collect();
        idx.sort_by(|&a, &b| self.runs[a].rel_err.total_cmp(&self.runs[b].rel_err));
        &self.runs[idx[(idx.len() - 1) / 2]]
    }
}

/// Cumulants, fit and scores for an already simulated path.
pub fn fit_and_score(
    g_true: &Matrix,
    sim: &Simulation,
    cumulants: &CumulantConfig,
    solver: &SolveConfig,
) -> Result<(IntegratedCumulants, SolveResult, f64, f64, Timings)> {
    let mut timings = Timings::default();
    let t0 = Instant::now();
    let cum = estimate_cumulants(&sim.events, cumulants)?;
    timings.cumulants = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let fit = solve(&cum, solver)?;
    timings.solve = t1.elapsed().as_secs_f64();
    let re = rel_err(g_true, &fit.g_hat)?;
    let rc = mean_rank_corr(g_true, &fit.g_hat)?;
    Ok((cum, fit, re, rc, timings))
}

pub fn run_single(cfg: &ExperimentConfig, model: &HawkesModel, horizon: f64, seed: u64) -> Result<RunReport> {
    let g_true = model.integral_matrix();
    let t0 = Instant::now();
    let sim = simulate(model, &cfg.simulation_config(horizon, seed))?;
    let sim_secs = t0.elapsed().as_secs_f64();
    log::info!(
        "seed {seed}: simulated {} events over T = {horizon:.4e}",
        sim.events.total_events()
    );
    let (cumulants, fit, rel, rank, mut timings) =
        fit_and_score(&g_true, &sim, &cfg.cumulants, &cfg.solver)?;
    timings.simulate = sim_secs;
    Ok(RunReport {
        seed,
        horizon,
        events_per_node: sim.events.counts(),
        truncated: sim.truncated,
        g_true,
        cumulants,
        fit,
        rel_err: rel,
        mean_rank_corr: rank,
        timings,
    })
}

/// All runs of `cfg`, in parallel, reported in seed order.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (model, horizon) = cfg.validate()?;
    let runs: Vec<RunReport> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|k| run_single(cfg, &model, horizon, cfg.seed.wrapping_add(k)))
        .collect::<Result<_>>()?;
    let median_rel_err = median(&runs.iter().map(|r| r.rel_err).collect::<Vec<_>>());
    let median_mean_rank_corr = median(&runs.iter().map(|r| r.mean_rank_corr).collect::<Vec<_>>());
    Ok(ExperimentReport {
        config: cfg.clone(),
        runs,
        median_rel_err,
        median_mean_rank_corr,
    })
}

/// Median with the mean of the two middle values for even lengths; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

const SHADES: [char; 5] = [' ', '░', '▒', '▓', '█'];

/// One character per entry, shaded by `|x| / vmax`; negative entries are
/// drawn with `-` when they would otherwise be visible.
pub fn heatmap(m: &Matrix, vmax: f64) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let x = m[(i, j)];
            let level = if vmax > 0.0 {
                ((x.abs() / vmax) * 4.0).round().clamp(0.0, 4.0) as usize
            } else {
                0
            };
            let c = if x < 0.0 && level > 0 { '-' } else { SHADES[level] };
            out.push(c);
            out.push(c);
        }
        out.push('\n');
    }
    out
}

/// Truth and estimate heatmaps next to each other on a shared scale.
pub fn heatmap_pair(truth: &Matrix, estimate: &Matrix) -> String {
    let vmax = truth.amax().max(estimate.amax());
    let left = heatmap(truth, vmax);
    let right = heatmap(estimate, vmax);
    let width = 2 * truth.ncols();
    let mut out = format!("{:<width$}   {}\n", "G", "Ĝ");
    for (a, b) in left.lines().zip(right.lines()) {
        let _ = writeln!(out, "{a:<width$} | {b}");
    }
    let _ = writeln!(out, "scale: ' ' 0 .. '█' {vmax:.4}");
    out
}

/// Per-run table followed by the medians.
pub fn summary_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "preset {}  d = {}  H = {}  runs = {}",
        report.config.preset,
        report.config.model.dim,
        report.config.cumulants.half_width,
        report.runs.len()
    );
    let _ = writeln!(
        out,
        "{:>6} {:>12} {:>10} {:>9} {:>10} {:>6} {:>9} {:>9}",
        "seed", "T", "events", "RelErr", "MRankCorr", "iters", "cum_s", "total_s"
    );
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{:>6} {:>12.4e} {:>10} {:>9.4} {:>10.4} {:>6} {:>9.3} {:>9.3}",
            r.seed,
            r.horizon,
            r.events_per_node.iter().sum::<usize>(),
            r.rel_err,
            r.mean_rank_corr,
            r.fit.iterations_used,
            r.timings.cumulants,
            r.timings.total()
        );
    }
    let _ = writeln!(
        out,
        "median RelErr = {:.4}  median MRankCorr = {:.4}",
        report.median_rel_err, report.median_mean_rank_corr
    );
    out
}
