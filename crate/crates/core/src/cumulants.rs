//! Integrated cumulant estimators: mean intensity `Λ̂`, integrated covariance
//! `Ĉ` and the contracted third cumulant `K̂c = [K̂^{iij}]`.
//!
//! With `D^j(τ) = N^j(τ+H) - N^j(τ-H) - 2HΛ̂^j` (events of `j` in the
//! half-open window `(τ-H, τ+H]`, centred):
//!
//! ```text
//! Λ̂^i     = |Zⁱ| / T
//! Ĉ^{ij}   = 1/T Σ_{τ∈Zⁱ} D^j(τ)
//! K̂^{ijk}  = 1/T Σ_{τ∈Zⁱ} D^j(τ) D^k(τ)
//!            - Λ̂^i/T Σ_{τ∈Zʲ} Σ_{τ'∈Zᵏ} (2H - |τ-τ'|)⁺ + 4H² Λ̂^i Λ̂^j Λ̂^k
//! ```
//!
//! [`BoundaryMode::Trimmed`] only centres windows at events whose window lies
//! inside `[0, T]` and normalises by the trimmed length instead of `T`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NphcError, Result};
use crate::linalg::Matrix;
use crate::model::EventSequences;

/// Event-count guard for [`brute_force_cumulants`].
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Every event is a window centre; sums are divided by `T`.
    PaperExact,
    /// Centres restricted to `[H, T-H]` (pair sums: `[2H, T-2H]`), divided by
    /// the trimmed length. Removes the edge bias of windows hanging past `[0, T]`.
    #[default]
    Trimmed,
}

impl BoundaryMode {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::PaperExact => "paper_exact",
            BoundaryMode::Trimmed => "trimmed",
        }
    }
}

impl std::str::FromStr for BoundaryMode {
    type Err = NphcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "paper_exact" | "paperexact" | "exact" => Ok(Self::PaperExact),
            "trimmed" => Ok(Self::Trimmed),
            other => Err(NphcError::InvalidParameter(format!(
                "unknown boundary mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantConfig {
    /// Window half-width `H`.
    pub half_width: f64,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
    #[serde(default = "default_true")]
    pub symmetrize: bool,
}

fn default_true() -> bool {
    true
}

impl CumulantConfig {
    pub fn new(half_width: f64) -> Self {
        Self {
            half_width,
            boundary_mode: BoundaryMode::default(),
            symmetrize: true,
        }
    }

    pub fn with_mode(mut self, mode: BoundaryMode) -> Self {
        self.boundary_mode = mode;
        self
    }

    pub fn with_symmetrize(mut self, symmetrize: bool) -> Self {
        self.symmetrize = symmetrize;
        self
    }

    /// `0 < 2H < T`; the trimmed pair sums additionally need `4H < T`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        let h = self.half_width;
        let err = || NphcError::InvalidWindow {
            half_width: h,
            horizon,
            mode: self.boundary_mode.name(),
        };
        if !(h.is_finite() && h > 0.0) || 2.0 * h >= horizon {
            return Err(err());
        }
        if self.boundary_mode == BoundaryMode::Trimmed && 4.0 * h >= horizon {
            return Err(err());
        }
        Ok(())
    }

    fn window(&self, horizon: f64) -> Window {
        let h = self.half_width;
        match self.boundary_mode {
            BoundaryMode::PaperExact => Window {
                h,
                centre: (f64::NEG_INFINITY, f64::INFINITY),
                norm: horizon,
                pair_centre: (f64::NEG_INFINITY, f64::INFINITY),
                pair_norm: horizon,
            },
            BoundaryMode::Trimmed => Window {
                h,
                centre: (h, horizon - h),
                norm: horizon - 2.0 * h,
                pair_centre: (2.0 * h, horizon - 2.0 * h),
                pair_norm: horizon - 4.0 * h,
            },
        }
    }
}

/// Which events act as window centres, and what the sums are divided by.
#[derive(Debug, Clone, Copy)]
struct Window {
    h: f64,
    centre: (f64, f64),
    norm: f64,
    pair_centre: (f64, f64),
    pair_norm: f64,
}

impl Window {
    fn centres<'a>(&self, seq: &'a [f64]) -> &'a [f64] {
        slice_between(seq, self.centre)
    }

    fn pair_centres<'a>(&self, seq: &'a [f64]) -> &'a [f64] {
        slice_between(seq, self.pair_centre)
    }
}

/// Sub-slice of the sorted `seq` with values in `[lo, hi]`.
fn slice_between(seq: &[f64], (lo, hi): (f64, f64)) -> &[f64] {
    let start = seq.partition_point(|&t| t < lo);
    let end = seq.partition_point(|&t| t <= hi);
    &seq[start..end.max(start)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedCumulants {
    pub lambda: DVector<f64>,
    pub c: Matrix,
    pub kc: Matrix,
    pub half_width: f64,
    pub horizon: f64,
}

impl IntegratedCumulants {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Builds from given values (for instance exact cumulants of a model).
    pub fn from_parts(lambda: DVector<f64>, c: Matrix, kc: Matrix) -> Result<Self> {
        let d = lambda.len();
        if c.shape() != (d, d) || kc.shape() != (d, d) {
            return Err(NphcError::ShapeMismatch {
                expected: format!("{d}x{d}"),
                got: format!("C {:?}, Kc {:?}", c.shape(), kc.shape()),
            });
        }
        Ok(Self {
            lambda,
            c,
            kc,
            half_width: f64::NAN,
            horizon: f64::NAN,
        })
    }

    /// Multiplies all three cumulants by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            lambda: &self.lambda * factor,
            c: &self.c * factor,
            kc: &self.kc * factor,
            half_width: self.half_width,
            horizon: self.horizon,
        }
    }
}

fn mean_from(events: &EventSequences, w: &Window) -> DVector<f64> {
    let lambda = DVector::from_iterator(
        events.dim(),
        events
            .nodes()
            .iter()
            .map(|seq| w.centres(seq).len() as f64 / w.norm),
    );
    if events.is_empty() {
        log::warn!("all event sequences are empty; cumulants are zero");
    }
    lambda
}

/// `Λ̂`.
pub fn estimate_mean(events: &EventSequences, cfg: &CumulantConfig) -> Result<DVector<f64>> {
    cfg.validate(events.horizon())?;
    Ok(mean_from(events, &cfg.window(events.horizon())))
}

/// Window sums shared by `Ĉ` and `K̂c`; indices are `[centre node][other node]`.
struct WindowSums {
    /// `Σ_{τ∈Zᵃ} Dᵇ(τ)`
    first: Matrix,
    /// `Σ_{τ∈Zᵃ} Dᵃ(τ) Dᵇ(τ)`
    cross: Matrix,
    /// `Σ_{τ∈Zᵃ} Dᵇ(τ)²`
    square: Matrix,
}

/// Events of `seq` in `(τ-H, τ+H]` for increasing `τ`, by two monotone pointers.
struct WindowCounter<'a> {
    seq: &'a [f64],
    lo: usize,
    hi: usize,
}

impl<'a> WindowCounter<'a> {
    fn new(seq: &'a [f64]) -> Self {
        Self { seq, lo: 0, hi: 0 }
    }

    #[inline]
    fn count(&mut self, tau: f64, h: f64) -> usize {
        let (left, right) = (tau - h, tau + h);
        while self.lo < self.seq.len() && self.seq[self.lo] <= left {
            self.lo += 1;
        }
        while self.hi < self.seq.len() && self.seq[self.hi] <= right {
            self.hi += 1;
        }
        self.hi - self.lo
    }
}

fn window_sums(events: &EventSequences, w: &Window, lambda: &DVector<f64>) -> WindowSums {
    let d = events.dim();
    let shift: Vec<f64> = lambda.iter().map(|l| 2.0 * w.h * l).collect();
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..d)
        .into_par_iter()
        .map(|a| {
            let mut first = vec![0.0; d];
            let mut cross = vec![0.0; d];
            let mut square = vec![0.0; d];
            let mut counters: Vec<WindowCounter> =
                events.nodes().iter().map(|s| WindowCounter::new(s)).collect();
            let mut dev = vec![0.0; d];
            for &tau in w.centres(events.node(a)) {
                for (b, counter) in counters.iter_mut().enumerate() {
                    dev[b] = counter.count(tau, w.h) as f64 - shift[b];
                }
                let own = dev[a];
                for b in 0..d {
                    first[b] += dev[b];
                    cross[b] += own * dev[b];
                    square[b] += dev[b] * dev[b];
                }
            }
            (first, cross, square)
        })
        .collect();
    let mut out = WindowSums {
        first: Matrix::zeros(d, d),
        cross: Matrix::zeros(d, d),
        square: Matrix::zeros(d, d),
    };
    for (a, (first, cross, square)) in rows.into_iter().enumerate() {
        for b in 0..d {
            out.first[(a, b)] = first[b];
            out.cross[(a, b)] = cross[b];
            out.square[(a, b)] = square[b];
        }
    }
    out
}

/// Double-double prefix sums of a sorted sequence, so that window sums of
/// large timestamps do not lose the small differences that matter.
struct PrefixSums {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PrefixSums {
    fn new(seq: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(seq.len() + 1);
        let mut lo = Vec::with_capacity(seq.len() + 1);
        let (mut h, mut l) = (0.0f64, 0.0f64);
        hi.push(h);
        lo.push(l);
        for &t in seq {
            let s = h + t;
            let bb = s - h;
            let err = (h - (s - bb)) + (t - bb);
            h = s;
            l += err;
            hi.push(h);
            lo.push(l);
        }
        Self { hi, lo }
    }

    /// `Σ_{k∈[from, to)} t_k - (to - from)·origin`.
    #[inline]
    fn offset_sum(&self, from: usize, to: usize, origin: f64) -> f64 {
        let raw_hi = self.hi[to] - self.hi[from];
        let raw_lo = self.lo[to] - self.lo[from];
        (raw_hi - (to - from) as f64 * origin) + raw_lo
    }
}

/// `Σ_{τ∈centres} Σ_{τ'∈other} (2H - |τ-τ'|)⁺` by a merge sweep.
fn pair_sum(centres: &[f64], other: &[f64], prefix: &PrefixSums, h: f64) -> f64 {
    let span = 2.0 * h;
    let (mut l, mut m, mut u) = (0usize, 0usize, 0usize);
    let mut total = 0.0;
    for &tau in centres {
        while l < other.len() && other[l] <= tau - span {
            l += 1;
        }
        while m < other.len() && other[m] <= tau {
            m += 1;
        }
        while u < other.len() && other[u] < tau + span {
            u += 1;
        }
        // left part: τ' ∈ (τ-2H, τ], contributes 2H - (τ - τ')
        let left = (m - l) as f64 * span + prefix.offset_sum(l, m, tau);
        // right part: τ' ∈ (τ, τ+2H), contributes 2H - (τ' - τ)
        let right = (u - m) as f64 * span - prefix.offset_sum(m, u, tau);
        total += left + right;
    }
    total
}

fn pair_sums(events: &EventSequences, w: &Window) -> Matrix {
    let d = events.dim();
    let prefixes: Vec<PrefixSums> = events.nodes().iter().map(|s| PrefixSums::new(s)).collect();
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|b| {
            let centres = w.pair_centres(events.node(b));
            (0..d)
                .map(|c| pair_sum(centres, events.node(c), &prefixes[c], w.h))
                .collect()
        })
        .collect();
    Matrix::from_fn(d, d, |b, c| rows[b][c])
}

fn covariance_from(sums: &WindowSums, w: &Window, symmetrize: bool) -> Matrix {
    let c = &sums.first / w.norm;
    if symmetrize {
        (&c + c.transpose()) * 0.5
    } else {
        c
    }
}

/// `K̂^{abc}` for the patterns needed by the contraction.
struct Skewness<'a> {
    sums: &'a WindowSums,
    pairs: &'a Matrix,
    lambda: &'a DVector<f64>,
    w: &'a Window,
}

impl Skewness<'_> {
    /// `K̂^{iij}` (equal to `K̂^{iji}` up to the pair-sum orientation).
    fn iij(&self, i: usize, j: usize, pair: f64) -> f64 {
        let (l, h) = (self.lambda, self.w.h);
        self.sums.cross[(i, j)] / self.w.norm - l[i] * pair / self.w.pair_norm
            + 4.0 * h * h * l[i] * l[i] * l[j]
    }

    /// `K̂^{jii}`.
    fn jii(&self, i: usize, j: usize) -> f64 {
        let (l, h) = (self.lambda, self.w.h);
        self.sums.square[(j, i)] / self.w.norm - l[j] * self.pairs[(i, i)] / self.w.pair_norm
            + 4.0 * h * h * l[j] * l[i] * l[i]
    }

    fn contracted(&self, symmetrize: bool) -> Matrix {
        let d = self.lambda.len();
        Matrix::from_fn(d, d, |i, j| {
            let k_iij = self.iij(i, j, self.pairs[(i, j)]);
            if !symmetrize || i == j {
                return k_iij;
            }
            let k_iji = self.iij(i, j, self.pairs[(j, i)]);
            (k_iij + k_iji + self.jii(i, j)) / 3.0
        })
    }
}

/// `Ĉ`, symmetrised as `(Ĉ + Ĉᵀ)/2` when configured.
pub fn estimate_covariance(events: &EventSequences, cfg: &CumulantConfig) -> Result<Matrix> {
    cfg.validate(events.horizon())?;
    let w = cfg.window(events.horizon());
    let lambda = mean_from(events, &w);
    let sums = window_sums(events, &w, &lambda);
    Ok(covariance_from(&sums, &w, cfg.symmetrize))
}

/// `K̂c = [K̂^{iij}]`; symmetrised entries average the `(i,i,j)`, `(i,j,i)`
/// and `(j,i,i)` index patterns.
pub fn estimate_skewness_contracted(
    events: &EventSequences,
    cfg: &CumulantConfig,
) -> Result<Matrix> {
    Ok(estimate_cumulants(events, cfg)?.kc)
}

/// All three integrated cumulants in one pass, `O(n d²)`.
pub fn estimate_cumulants(
    events: &EventSequences,
    cfg: &CumulantConfig,
) -> Result<IntegratedCumulants> {
    cfg.validate(events.horizon())?;
    let w = cfg.window(events.horizon());
    let lambda = mean_from(events, &w);
    let sums = window_sums(events, &w, &lambda);
    let pairs = pair_sums(events, &w);
    let c = covariance_from(&sums, &w, cfg.symmetrize);
    let kc = Skewness {
        sums: &sums,
        pairs: &pairs,
        lambda: &lambda,
        w: &w,
    }
    .contracted(cfg.symmetrize);
    Ok(IntegratedCumulants {
        lambda,
        c,
        kc,
        half_width: cfg.half_width,
        horizon: events.horizon(),
    })
}

/// Tabulates `Ĉ` over several half-widths, to look for the plateau where the
/// window covers the kernels without adding needless noise.
pub fn scan_half_widths(
    events: &EventSequences,
    half_widths: &[f64],
    mode: BoundaryMode,
) -> Result<Vec<(f64, Matrix)>> {
    half_widths
        .iter()
        .map(|&h| {
            let cfg = CumulantConfig::new(h).with_mode(mode);
            Ok((h, estimate_covariance(events, &cfg)?))
        })
        .collect()
}

/// The same estimators by naive double loops over all events, for testing.
pub fn brute_force_cumulants(
    events: &EventSequences,
    cfg: &CumulantConfig,
) -> Result<IntegratedCumulants> {
    let n = events.total_events();
    if n > BRUTE_FORCE_LIMIT {
        return Err(NphcError::TooLarge {
            events: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    cfg.validate(events.horizon())?;
    let d = events.dim();
    let h = cfg.half_width;
    let t_len = events.horizon();
    let (centre_lo, centre_hi, norm, pair_lo, pair_hi, pair_norm) = match cfg.boundary_mode {
        BoundaryMode::PaperExact => (
            f64::NEG_INFINITY,
            f64::INFINITY,
            t_len,
            f64::NEG_INFINITY,
            f64::INFINITY,
            t_len,
        ),
        BoundaryMode::Trimmed => (h, t_len - h, t_len - 2.0 * h, 2.0 * h, t_len - 2.0 * h, t_len - 4.0 * h),
    };
    let is_centre = |t: f64| t >= centre_lo && t <= centre_hi;
    let is_pair_centre = |t: f64| t >= pair_lo && t <= pair_hi;

    let lambda: Vec<f64> = (0..d)
        .map(|i| events.node(i).iter().filter(|&&t| is_centre(t)).count() as f64 / norm)
        .collect();
    let dev = |j: usize, tau: f64| -> f64 {
        let count = events
            .node(j)
            .iter()
            .filter(|&&t| t > tau - h && t <= tau + h)
            .count();
        count as f64 - 2.0 * h * lambda[j]
    };
    let pair = |j: usize, k: usize| -> f64 {
        let mut s = 0.0;
        for &a in events.node(j).iter().filter(|&&t| is_pair_centre(t)) {
            for &b in events.node(k) {
                s += (2.0 * h - (a - b).abs()).max(0.0);
            }
        }
        s
    };
    let k_full = |i: usize, j: usize, k: usize| -> f64 {
        let mut s = 0.0;
        for &tau in events.node(i).iter().filter(|&&t| is_centre(t)) {
            s += dev(j, tau) * dev(k, tau);
        }
        s / norm - lambda[i] * pair(j, k) / pair_norm + 4.0 * h * h * lambda[i] * lambda[j] * lambda[k]
    };

    let mut c = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let s: f64 = events
                .node(i)
                .iter()
                .filter(|&&t| is_centre(t))
                .map(|&tau| dev(j, tau))
                .sum();
            c[(i, j)] = s / norm;
        }
    }
    let mut kc = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            kc[(i, j)] = if cfg.symmetrize && i != j {
                (k_full(i, i, j) + k_full(i, j, i) + k_full(j, i, i)) / 3.0
            } else {
                k_full(i, i, j)
            };
        }
    }
    if cfg.symmetrize {
        c = (&c + c.transpose()) * 0.5;
    }
    Ok(IntegratedCumulants {
        lambda: DVector::from_vec(lambda),
        c,
        kc,
        half_width: h,
        horizon: t_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn three_events() -> EventSequences {
        EventSequences::new(vec![vec![1.0, 2.0, 3.0]], 4.0).unwrap()
    }

    fn exact(h: f64) -> CumulantConfig {
        CumulantConfig::new(h)
            .with_mode(BoundaryMode::PaperExact)
            .with_symmetrize(false)
    }

    #[test]
    fn mean_examples() {
        let cfg = exact(1.0);
        assert_eq!(estimate_mean(&three_events(), &cfg).unwrap()[0], 0.75);
        let empty = EventSequences::empty(1, 10.0).unwrap();
        assert_eq!(estimate_mean(&empty, &cfg).unwrap()[0], 0.0);
        let two = EventSequences::new(
            vec![
                (0..100).map(|k| k as f64 + 0.5).collect(),
                (0..50).map(|k| 2.0 * k as f64 + 0.25).collect(),
            ],
            100.0,
        )
        .unwrap();
        let l = estimate_mean(&two, &cfg).unwrap();
        assert_eq!(l.as_slice(), &[1.0, 0.5]);
    }

    #[test]
    fn covariance_three_events() {
        // window counts 2, 2, 1; Λ̂ = 0.75; ((2-1.5) + (2-1.5) + (1-1.5)) / 4
        let c = estimate_covariance(&three_events(), &exact(1.0)).unwrap();
        assert!((c[(0, 0)] - 0.125).abs() < 1e-15);
        let bf = brute_force_cumulants(&three_events(), &exact(1.0)).unwrap();
        assert!((bf.c[(0, 0)] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn skewness_three_events_pinned() {
        // Hand enumeration: D = (0.5, 0.5, -0.5), Σ D² / 4 = 0.1875;
        // pair sum over 3x3 with 2H = 2: 3·2 + 4·1 = 10, times Λ̂/T = 0.1875 → 1.875;
        // 4H²Λ̂³ = 1.6875.  K̂ = 0.1875 - 1.875 + 1.6875 = 0.
        let k = estimate_skewness_contracted(&three_events(), &exact(1.0)).unwrap();
        let bf = brute_force_cumulants(&three_events(), &exact(1.0)).unwrap();
        assert!((k[(0, 0)] - bf.kc[(0, 0)]).abs() < 1e-15);
        assert!(k[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn empty_second_node_has_zero_cross_terms() {
        let ev = EventSequences::new(vec![vec![1.0, 2.5, 3.0, 7.0], vec![]], 10.0).unwrap();
        let c = estimate_covariance(&ev, &exact(1.0)).unwrap();
        assert_eq!(c[(0, 1)], 0.0);
        assert_eq!(c[(1, 0)], 0.0);
        assert_eq!(c[(1, 1)], 0.0);
    }

    #[test]
    fn all_empty_gives_zeros() {
        let ev = EventSequences::empty(3, 10.0).unwrap();
        let cum = estimate_cumulants(&ev, &CumulantConfig::new(1.0)).unwrap();
        assert!(cum.c.iter().all(|&x| x == 0.0));
        assert!(cum.kc.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn window_validation() {
        let ev = three_events();
        assert!(matches!(
            estimate_covariance(&ev, &exact(2.0)),
            Err(NphcError::InvalidWindow { .. })
        ));
        // trimmed needs 4H < T
        let trimmed = CumulantConfig::new(1.0);
        assert!(estimate_covariance(&ev, &trimmed).is_err());
        assert!(estimate_covariance(&ev, &CumulantConfig::new(0.9)).is_ok());
        assert!(estimate_covariance(&ev, &exact(0.0)).is_err());
    }

    #[test]
    fn brute_force_guard() {
        let ev = EventSequences::new(vec![(0..10_001).map(|k| k as f64).collect()], 20_000.0)
            .unwrap();
        assert!(matches!(
            brute_force_cumulants(&ev, &exact(1.0)),
            Err(NphcError::TooLarge { .. })
        ));
    }

    fn random_events(rng: &mut ChaCha8Rng, d: usize, n: usize, horizon: f64) -> EventSequences {
        let mut nodes = vec![Vec::new(); d];
        for _ in 0..n {
            let node = rng.random_range(0..d);
            // coarse grid so that cross-node ties and exact window edges occur
            let t = (rng.random::<f64>() * horizon * 8.0).floor() / 8.0;
            nodes[node].push(t);
        }
        for s in &mut nodes {
            s.sort_by(f64::total_cmp);
            s.dedup();
        }
        EventSequences::new(nodes, horizon).unwrap()
    }

    #[test]
    fn sweep_matches_brute_force_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [BoundaryMode::PaperExact, BoundaryMode::Trimmed] {
            for sym in [false, true] {
                let ev = random_events(&mut rng, 3, 120, 40.0);
                let cfg = CumulantConfig::new(1.5).with_mode(mode).with_symmetrize(sym);
                let fast = estimate_cumulants(&ev, &cfg).unwrap();
                let slow = brute_force_cumulants(&ev, &cfg).unwrap();
                assert!((&fast.lambda - &slow.lambda).amax() <= 1e-12);
                assert!((&fast.c - &slow.c).amax() <= 1e-10, "{mode:?} {sym}");
                assert!((&fast.kc - &slow.kc).amax() <= 1e-10, "{mode:?} {sym}");
                if sym {
                    assert_eq!(fast.c, fast.c.transpose());
                }
            }
        }
    }

    #[test]
    fn large_timestamps_keep_precision() {
        // same relative configuration shifted far from the origin
        let base = vec![vec![1.0, 1.3, 2.2, 2.9], vec![1.1, 2.0, 2.5]];
        let offset = 1e9;
        let shifted: Vec<Vec<f64>> = base
            .iter()
            .map(|s| s.iter().map(|t| t + offset).collect())
            .collect();
        let near = EventSequences::new(base, 4.0).unwrap();
        let far = EventSequences::new(shifted, offset + 4.0).unwrap();
        let h = 0.6;
        let w_far = exact(h).window(far.horizon());
        let w_near = exact(h).window(near.horizon());
        let p_far = pair_sums(&far, &w_far);
        let p_near = pair_sums(&near, &w_near);
        assert!((p_far - p_near).amax() < 1e-6);
    }
}
