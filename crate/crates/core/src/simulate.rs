//! Exact Hawkes sample paths by Ogata's thinning.
//!
//! Candidates are proposed from a homogeneous Poisson process whose rate is
//! an upper bound on the total intensity until the next accepted event, and
//! accepted with probability `Σλ(t) / bound`. Exponential kernels are carried
//! as recursively decayed states; other kernels are evaluated per event over
//! a pruned window of recent history. Events older than a kernel's
//! `tail_tolerance` mass horizon no longer contribute.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64(seed)`, one stream per run. For each candidate the engine
//! draws, in order: one uniform for the waiting time (`-ln(1-u)/bound`), one
//! for acceptance, one for the node, and in ancestry mode one for the parent.

use std::collections::VecDeque;
use std::ops::Range;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NphcError, Result};
use crate::linalg::Matrix;
use crate::model::{EventSequences, HawkesModel, KernelShape, KernelSpec, STABILITY_MARGIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub seed: u64,
    /// Hard cap on the number of accepted events; reaching it truncates the path.
    pub max_events: usize,
    /// ChaCha stream; independent runs with one seed use distinct streams.
    #[serde(default)]
    pub stream: u64,
    /// Record the direct ancestor of every event.
    #[serde(default)]
    pub track_ancestry: bool,
    /// Kernel mass fraction below which old events are dropped from the history.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

fn default_tail_tolerance() -> f64 {
    1e-8
}

impl SimulationConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            max_events: 50_000_000,
            stream: 0,
            track_ancestry: false,
            tail_tolerance: default_tail_tolerance(),
        }
    }

    pub fn with_ancestry(mut self) -> Self {
        self.track_ancestry = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(NphcError::InvalidParameter(format!(
                "simulation horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if self.max_events == 0 {
            return Err(NphcError::InvalidParameter("max_events must be > 0".into()));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(NphcError::InvalidParameter(format!(
                "tail_tolerance must lie in (0, 1), got {}",
                self.tail_tolerance
            )));
        }
        Ok(())
    }
}

/// Direct ancestor of a simulated event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    /// Triggered by the exogenous baseline.
    Baseline,
    /// Triggered through the kernel of event `index` of `node`.
    Event { node: usize, index: usize },
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub events: EventSequences,
    /// The event cap was reached before the horizon.
    pub truncated: bool,
    /// Per node, per event, when ancestry tracking is on.
    pub ancestry: Option<Vec<Vec<Parent>>>,
    pub candidates: usize,
}

impl Simulation {
    /// `counts[i][j]`: number of events of `i` whose direct ancestor is an
    /// event of `j`.
    pub fn ancestor_counts(&self) -> Option<Matrix> {
        let ancestry = self.ancestry.as_ref()?;
        let d = ancestry.len();
        let mut counts = Matrix::zeros(d, d);
        for (i, parents) in ancestry.iter().enumerate() {
            for p in parents {
                if let Parent::Event { node, .. } = p {
                    counts[(i, *node)] += 1.0;
                }
            }
        }
        Some(counts)
    }
}

/// `λ(t⁻)`: intensity at `t` from events strictly before `t`.
pub fn intensity_at(model: &HawkesModel, history: &EventSequences, t: f64) -> DVector<f64> {
    let d = model.dim();
    let mut lambda = model.mu_vector();
    for j in 0..d {
        for &tau in history.node(j).iter().take_while(|&&tau| tau < t) {
            for i in 0..d {
                lambda[i] += model.kernels[i][j].value(t - tau);
            }
        }
    }
    lambda
}

/// Upper bound on `Σᵢ λⁱ(s)` for every `s > t`, assuming no further events.
///
/// Each past event contributes the supremum of its kernel over the lags it
/// can still reach, so delayed rectangular kernels count their plateau even
/// before it starts.
pub fn dominating_bound(model: &HawkesModel, history: &EventSequences, t: f64) -> f64 {
    let d = model.dim();
    let mut bound: f64 = model.mu.iter().sum();
    for j in 0..d {
        for &tau in history.node(j).iter().take_while(|&&tau| tau <= t) {
            for i in 0..d {
                bound += model.kernels[i][j].sup_after(t - tau);
            }
        }
    }
    bound
}

struct ExpSlot {
    beta: f64,
    value: f64,
}

struct ExpLink {
    target: usize,
    slot: usize,
    jump: f64,
}

struct WindowPair {
    target: usize,
    kernel: KernelSpec,
    horizon: f64,
}

struct Source {
    exp_links: Vec<ExpLink>,
    pairs: Vec<WindowPair>,
    horizon: f64,
    /// (time, index within node) of events that still matter.
    window: VecDeque<(f64, usize)>,
}

struct Engine<'a> {
    model: &'a HawkesModel,
    slots: Vec<Vec<ExpSlot>>,
    slots_time: f64,
    sources: Vec<Source>,
}

impl<'a> Engine<'a> {
    fn new(model: &'a HawkesModel, cfg: &SimulationConfig) -> Self {
        let d = model.dim();
        let mut slots: Vec<Vec<ExpSlot>> = (0..d).map(|_| Vec::new()).collect();
        let mut sources = Vec::with_capacity(d);
        for j in 0..d {
            let mut src = Source {
                exp_links: Vec::new(),
                pairs: Vec::new(),
                horizon: 0.0,
                window: VecDeque::new(),
            };
            for (i, target_slots) in slots.iter_mut().enumerate() {
                let k = model.kernels[i][j];
                if k.is_null() {
                    continue;
                }
                if k.shape == KernelShape::Exponential && !cfg.track_ancestry {
                    let slot = match target_slots.iter().position(|s| s.beta == k.beta) {
                        Some(s) => s,
                        None => {
                            target_slots.push(ExpSlot {
                                beta: k.beta,
                                value: 0.0,
                            });
                            target_slots.len() - 1
                        }
                    };
                    src.exp_links.push(ExpLink {
                        target: i,
                        slot,
                        jump: k.alpha * k.beta,
                    });
                } else {
                    let horizon = k.memory_horizon(cfg.tail_tolerance);
                    src.horizon = src.horizon.max(horizon);
                    src.pairs.push(WindowPair {
                        target: i,
                        kernel: k,
                        horizon,
                    });
                }
            }
            sources.push(src);
        }
        Self {
            model,
            slots,
            slots_time: 0.0,
            sources,
        }
    }

    /// Intensities at `t` (left limit) into `lambda`; returns the bound that
    /// holds after `t` if no event is added.
    fn evaluate(&mut self, t: f64, lambda: &mut [f64]) -> f64 {
        let dt = t - self.slots_time;
        self.slots_time = t;
        let mut bound = 0.0;
        for (i, lam) in lambda.iter_mut().enumerate() {
            let mut v = self.model.mu[i];
            for s in &mut self.slots[i] {
                s.value *= (-s.beta * dt).exp();
                v += s.value;
            }
            *lam = v;
            bound += v;
        }
        for src in &mut self.sources {
            while let Some(&(tau, _)) = src.window.front() {
                if t - tau > src.horizon {
                    src.window.pop_front();
                } else {
                    break;
                }
            }
            for &(tau, _) in &src.window {
                let lag = t - tau;
                for p in &src.pairs {
                    if lag <= p.horizon {
                        lambda[p.target] += p.kernel.value(lag);
                        bound += p.kernel.sup_after(lag);
                    }
                }
            }
        }
        bound
    }

    /// Registers an event of `node` at `t` (the engine time); returns the
    /// increase of the bound.
    fn push(&mut self, node: usize, index: usize, t: f64) -> f64 {
        debug_assert_eq!(t, self.slots_time);
        let src = &mut self.sources[node];
        let mut added = 0.0;
        for link in &src.exp_links {
            self.slots[link.target][link.slot].value += link.jump;
            added += link.jump;
        }
        for p in &src.pairs {
            added += p.kernel.sup_after(0.0);
        }
        if !src.pairs.is_empty() {
            src.window.push_back((t, index));
        }
        added
    }

    /// Samples the direct ancestor of an event of `node` at `t` given the
    /// uniform draw `u ∈ [0, λⁱ(t))`. Only valid when every kernel is on the
    /// per-event path.
    fn parent(&self, node: usize, t: f64, mut u: f64) -> Parent {
        u -= self.model.mu[node];
        if u < 0.0 {
            return Parent::Baseline;
        }
        let mut last = Parent::Baseline;
        for (j, src) in self.sources.iter().enumerate() {
            for p in src.pairs.iter().filter(|p| p.target == node) {
                for &(tau, idx) in &src.window {
                    let lag = t - tau;
                    if lag > p.horizon {
                        continue;
                    }
                    let v = p.kernel.value(lag);
                    if v > 0.0 {
                        last = Parent::Event { node: j, index: idx };
                        u -= v;
                        if u < 0.0 {
                            return last;
                        }
                    }
                }
            }
        }
        // rounding left a sliver of mass: attribute to the last contributor
        last
    }
}

/// Simulates one path on `[0, cfg.horizon]`.
pub fn simulate(model: &HawkesModel, cfg: &SimulationConfig) -> Result<Simulation> {
    cfg.validate()?;
    let limit = 1.0 - STABILITY_MARGIN;
    let radius = model.spectral_radius()?;
    if radius >= limit {
        return Err(NphcError::StabilityViolation { radius, limit });
    }
    let d = model.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);

    let mut engine = Engine::new(model, cfg);
    let mut events: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut ancestry: Option<Vec<Vec<Parent>>> = cfg.track_ancestry.then(|| vec![Vec::new(); d]);
    let mut lambda = vec![0.0; d];
    let mut bound: f64 = model.mu.iter().sum();
    let mut t = 0.0;
    let mut total = 0usize;
    let mut candidates = 0usize;
    let mut truncated = false;

    while bound > 0.0 {
        let u: f64 = rng.random();
        let next = t + -(1.0 - u).ln() / bound;
        if next > cfg.horizon {
            break;
        }
        // a zero waiting time would duplicate a timestamp; redraw
        if next <= t {
            continue;
        }
        t = next;
        candidates += 1;
        let previous_bound = bound;
        bound = engine.evaluate(t, &mut lambda);
        let total_intensity: f64 = lambda.iter().sum();
        debug_assert!(
            total_intensity <= previous_bound * (1.0 + 1e-9),
            "thinning bound violated at t={t}: {total_intensity} > {previous_bound}"
        );
        let accept: f64 = rng.random::<f64>() * previous_bound;
        if accept >= total_intensity {
            continue;
        }
        let mut pick: f64 = rng.random::<f64>() * total_intensity;
        let mut node = d - 1;
        for (i, &l) in lambda.iter().enumerate() {
            if pick < l {
                node = i;
                break;
            }
            pick -= l;
        }
        if let Some(anc) = ancestry.as_mut() {
            let u: f64 = rng.random::<f64>() * lambda[node];
            anc[node].push(engine.parent(node, t, u));
        }
        let index = events[node].len();
        events[node].push(t);
        bound += engine.push(node, index, t);
        total += 1;
        if total >= cfg.max_events {
            truncated = true;
            log::warn!(
                "simulation truncated at {total} events (t = {t:.3} of {})",
                cfg.horizon
            );
            break;
        }
    }

    Ok(Simulation {
        events: EventSequences::new(events, cfg.horizon)?,
        truncated,
        ancestry,
        candidates,
    })
}

/// Independent runs `0..runs` on separate streams of `cfg.seed`, in parallel.
/// Results are in run order regardless of scheduling.
pub fn simulate_many(
    model: &HawkesModel,
    cfg: &SimulationConfig,
    runs: usize,
) -> Result<Vec<Simulation>> {
    (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut c = cfg.clone();
            c.stream = cfg.stream.wrapping_add(run);
            simulate(model, &c)
        })
        .collect()
}

/// Three contiguous node groups at the start of the index range; nodes after
/// them are idle (baseline only).
///
/// The blocks are an upper one (group 0 ← group 2), a square one on the
/// diagonal (group 1 ← group 1) and a lower one (group 2 ← group 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub group_sizes: [usize; 3],
}

impl BlockLayout {
    /// Groups of `k = min(⌊0.3 d⌋, ⌊0.7 / alpha⌋)`, `k` and `k + 1` nodes
    /// (the last one capped by what is left), so that both the square block
    /// (`k·alpha`) and the upper/lower pair (`alpha·√(k(k+1))`) stay below 1.
    /// Gives 3/3/4 for `d = 10, alpha = 1/6` and 7/7/8 for `d = 100, alpha = 1/10`.
    pub fn preset(d: usize, alpha: f64) -> Self {
        let cap = if alpha > 0.0 { (0.7 / alpha + 1e-9).floor() as usize } else { usize::MAX };
        let k = ((d * 3) / 10).min(cap).max(1);
        let last = d.saturating_sub(2 * k).min(k + 1);
        Self {
            group_sizes: [k, k, last],
        }
    }

    /// Number of nodes covered by the groups.
    pub fn dim(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    fn group(&self, g: usize) -> Range<usize> {
        let start: usize = self.group_sizes[..g].iter().sum();
        start..start + self.group_sizes[g]
    }

    /// `(rows, cols)` of the three blocks carrying `β₀`, `β₁`, `β₂`:
    /// lower, square and upper.
    pub fn blocks(&self) -> [(Range<usize>, Range<usize>); 3] {
        [
            (self.group(2), self.group(0)),
            (self.group(1), self.group(1)),
            (self.group(0), self.group(2)),
        ]
    }
}

/// Parameters of the three-block benchmark model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModelSpec {
    pub dim: usize,
    pub shape: KernelShape,
    /// Common kernel integral on the blocks.
    pub alpha: f64,
    pub betas: [f64; 3],
    pub gamma: f64,
    pub mu: f64,
    pub layout: BlockLayout,
}

impl BlockModelSpec {
    /// `β = (0.1, 1, 10)`, `γ = 1/2`, `α = 1/6` for `d = 10` and `1/10` for
    /// `d = 100` (1/6 for any other dimension), uniform baseline `mu`.
    pub fn preset(dim: usize, shape: KernelShape, mu: f64) -> Self {
        let alpha = if dim == 100 { 1.0 / 10.0 } else { 1.0 / 6.0 };
        Self {
            dim,
            shape,
            alpha,
            betas: [0.1, 1.0, 10.0],
            gamma: 0.5,
            mu,
            layout: BlockLayout::preset(dim, alpha),
        }
    }

    pub fn build(&self) -> Result<HawkesModel> {
        make_block_model(self)
    }
}

/// Builds the block benchmark model: constant `alpha` on three blocks with
/// their own time scales, zero elsewhere.
pub fn make_block_model(spec: &BlockModelSpec) -> Result<HawkesModel> {
    let d = spec.dim;
    if spec.layout.dim() > d || spec.layout.group_sizes.iter().any(|&s| s == 0) {
        return Err(NphcError::InvalidParameter(format!(
            "block layout {:?} does not fit three non-empty groups into {d} nodes",
            spec.layout.group_sizes
        )));
    }
    let mut kernels = vec![vec![KernelSpec::zero(); d]; d];
    if spec.alpha > 0.0 {
        for ((rows, cols), &beta) in spec.layout.blocks().into_iter().zip(&spec.betas) {
            for i in rows.clone() {
                for j in cols.clone() {
                    kernels[i][j] = KernelSpec::with_shape(spec.shape, spec.alpha, beta, spec.gamma);
                }
            }
        }
    }
    let model = HawkesModel::new(vec![spec.mu; d], kernels)?;
    let limit = 1.0 - STABILITY_MARGIN;
    let radius = model.spectral_radius()?;
    if radius >= limit {
        return Err(NphcError::StabilityViolation { radius, limit });
    }
    Ok(model)
}
