//! Domain types: observed event data, parametric kernels, and the duality
//! between the kernel-integral matrix `G` and `R = (I - G)⁻¹`.
//!
//! Entry `(i, j)` of `G` is the integral of the kernel through which events
//! of node `j` excite node `i`. It is also the expected number of events of
//! `i` whose direct ancestor is a given event of `j`, and `g^{ij} = 0` means
//! that `j` does not Granger-cause `i`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{NphcError, Result};
use crate::linalg::{self, Matrix};

/// Safety margin on the stability check: `ρ(G) < 1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-6;

/// Multivariate event data observed on `[0, T]`.
///
/// Each node's timestamps are strictly increasing. Ties across nodes are
/// allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequences {
    horizon: f64,
    events: Vec<Vec<f64>>,
}

impl EventSequences {
    /// Builds from per-node sequences that must already be strictly increasing.
    pub fn new(events: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(NphcError::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        for (node, seq) in events.iter().enumerate() {
            for (k, &t) in seq.iter().enumerate() {
                if !t.is_finite() || t < 0.0 || t > horizon {
                    return Err(NphcError::Validation(format!(
                        "node {node}: timestamp {t} outside [0, {horizon}]"
                    )));
                }
                if k > 0 && seq[k - 1] >= t {
                    return Err(NphcError::Validation(format!(
                        "node {node}: timestamps not strictly increasing at index {k} ({} then {t})",
                        seq[k - 1]
                    )));
                }
            }
        }
        Ok(Self { horizon, events })
    }

    /// Sorts each node's timestamps, then validates. Duplicates within a node
    /// are still rejected.
    pub fn from_unsorted(mut events: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        for seq in &mut events {
            seq.sort_by(f64::total_cmp);
        }
        Self::new(events, horizon)
    }

    pub fn empty(dim: usize, horizon: f64) -> Result<Self> {
        Self::new(vec![Vec::new(); dim], horizon)
    }

    pub fn dim(&self) -> usize {
        self.events.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.events[i]
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.events
    }

    pub fn counts(&self) -> Vec<usize> {
        self.events.iter().map(Vec::len).collect()
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_events() == 0
    }

    pub fn into_inner(self) -> (Vec<Vec<f64>>, f64) {
        (self.events, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// `αβ exp(-βt)`
    Exponential,
    /// `αβ 1[γ ≤ t ≤ γ + 1/β]`
    Rectangular,
    /// `αβγ (1 + βt)^-(1+γ)`
    PowerLaw,
    Zero,
}

impl std::str::FromStr for KernelShape {
    type Err = NphcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp" | "exponential" => Ok(Self::Exponential),
            "rect" | "rectangular" => Ok(Self::Rectangular),
            "plaw" | "power_law" | "powerlaw" => Ok(Self::PowerLaw),
            "zero" => Ok(Self::Zero),
            other => Err(NphcError::InvalidParameter(format!(
                "unknown kernel shape '{other}'"
            ))),
        }
    }
}

/// One parametric kernel `φ^{ij}`.
///
/// `alpha` is always the kernel integral. `gamma` is a delay for the
/// rectangular shape and a tail exponent for the power law; it is unused
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn exponential(alpha: f64, beta: f64) -> Self {
        Self {
            shape: KernelShape::Exponential,
            alpha,
            beta,
            gamma: 0.0,
        }
    }

    pub fn rectangular(alpha: f64, beta: f64, delay: f64) -> Self {
        Self {
            shape: KernelShape::Rectangular,
            alpha,
            beta,
            gamma: delay,
        }
    }

    pub fn power_law(alpha: f64, beta: f64, exponent: f64) -> Self {
        Self {
            shape: KernelShape::PowerLaw,
            alpha,
            beta,
            gamma: exponent,
        }
    }

    pub fn zero() -> Self {
        Self {
            shape: KernelShape::Zero,
            alpha: 0.0,
            beta: 1.0,
            gamma: 0.0,
        }
    }

    pub fn with_shape(shape: KernelShape, alpha: f64, beta: f64, gamma: f64) -> Self {
        match shape {
            KernelShape::Zero => Self::zero(),
            _ => Self {
                shape,
                alpha,
                beta,
                gamma,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape == KernelShape::Zero {
            return Ok(());
        }
        let bad = |m: String| Err(NphcError::InvalidParameter(m));
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("kernel alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("kernel beta must be > 0, got {}", self.beta));
        }
        match self.shape {
            KernelShape::Rectangular if !(self.gamma.is_finite() && self.gamma >= 0.0) => {
                bad(format!("rectangular delay must be >= 0, got {}", self.gamma))
            }
            KernelShape::PowerLaw if !(self.gamma.is_finite() && self.gamma > 0.0) => {
                bad(format!("power-law exponent must be > 0, got {}", self.gamma))
            }
            _ => Ok(()),
        }
    }

    /// True when the kernel contributes nothing.
    pub fn is_null(&self) -> bool {
        self.shape == KernelShape::Zero || self.alpha == 0.0
    }

    pub fn integral(&self) -> f64 {
        if self.shape == KernelShape::Zero {
            0.0
        } else {
            self.alpha
        }
    }

    /// `φ(t)`, zero for negative lags.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 || self.is_null() {
            return 0.0;
        }
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        match self.shape {
            KernelShape::Exponential => a * b * (-b * t).exp(),
            KernelShape::Rectangular => {
                if t >= g && t <= g + 1.0 / b {
                    a * b
                } else {
                    0.0
                }
            }
            KernelShape::PowerLaw => a * b * g * (1.0 + b * t).powf(-(1.0 + g)),
            KernelShape::Zero => 0.0,
        }
    }

    /// `∫₀ᵗ φ(s) ds`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 || self.is_null() {
            return 0.0;
        }
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        match self.shape {
            KernelShape::Exponential => a * (-(-b * t).exp_m1()),
            KernelShape::Rectangular => a * b * (t - g).clamp(0.0, 1.0 / b),
            KernelShape::PowerLaw => a * (1.0 - (1.0 + b * t).powf(-g)),
            KernelShape::Zero => 0.0,
        }
    }

    /// `sup_{u ≥ lag} φ(u)`: the largest value the kernel can still take for
    /// an event that is already `lag` old.
    pub fn sup_after(&self, lag: f64) -> f64 {
        if self.is_null() {
            return 0.0;
        }
        match self.shape {
            KernelShape::Rectangular => {
                if lag <= self.gamma + 1.0 / self.beta {
                    self.alpha * self.beta
                } else {
                    0.0
                }
            }
            _ => self.value(lag.max(0.0)),
        }
    }

    /// Lag beyond which the remaining kernel mass is at most `tol · α`.
    pub fn memory_horizon(&self, tol: f64) -> f64 {
        if self.is_null() {
            return 0.0;
        }
        let (b, g) = (self.beta, self.gamma);
        match self.shape {
            KernelShape::Exponential => (1.0 / tol).ln() / b,
            KernelShape::Rectangular => g + 1.0 / b,
            KernelShape::PowerLaw => (tol.powf(-1.0 / g) - 1.0) / b,
            KernelShape::Zero => 0.0,
        }
    }

    /// Non-increasing kernels are dominated by their current value.
    pub fn is_monotone(&self) -> bool {
        !matches!(self.shape, KernelShape::Rectangular)
    }
}

/// A stationary multivariate Hawkes model: baselines and a `d × d` kernel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesModel {
    pub mu: Vec<f64>,
    /// `kernels[i][j]` is `φ^{ij}`, the effect of node `j` on node `i`.
    pub kernels: Vec<Vec<KernelSpec>>,
}

impl HawkesModel {
    pub fn new(mu: Vec<f64>, kernels: Vec<Vec<KernelSpec>>) -> Result<Self> {
        let d = mu.len();
        if kernels.len() != d || kernels.iter().any(|row| row.len() != d) {
            return Err(NphcError::ShapeMismatch {
                expected: format!("{d}x{d} kernel grid"),
                got: format!(
                    "{}x{}",
                    kernels.len(),
                    kernels.first().map_or(0, Vec::len)
                ),
            });
        }
        if let Some(m) = mu.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(NphcError::InvalidParameter(format!(
                "baseline intensities must be >= 0, got {m}"
            )));
        }
        for row in &kernels {
            for k in row {
                k.validate()?;
            }
        }
        Ok(Self { mu, kernels })
    }

    /// Model with every kernel of the same shape and parameters given per entry.
    pub fn exponential(mu: Vec<f64>, alpha: &Matrix, beta: f64) -> Result<Self> {
        let d = mu.len();
        let kernels = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if alpha[(i, j)] == 0.0 {
                            KernelSpec::zero()
                        } else {
                            KernelSpec::exponential(alpha[(i, j)], beta)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(mu, kernels)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `G` with `g^{ij} = ∫ φ^{ij}`.
    pub fn integral_matrix(&self) -> Matrix {
        let d = self.dim();
        Matrix::from_fn(d, d, |i, j| self.kernels[i][j].integral())
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.integral_matrix())
    }

    /// `ρ(G) < 1` (with the safety margin).
    pub fn stable(&self) -> bool {
        self.spectral_radius()
            .map(|r| r < 1.0 - STABILITY_MARGIN)
            .unwrap_or(false)
    }

    pub fn mu_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.mu)
    }
}

/// `G` and `R = (I - G)⁻¹` computed together.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalityMatrices {
    pub g: Matrix,
    pub r: Matrix,
}

impl CausalityMatrices {
    pub fn from_g(g: Matrix) -> Result<Self> {
        let r = g_to_r(&g)?;
        Ok(Self { g, r })
    }

    pub fn from_r(r: Matrix) -> Result<Self> {
        let g = r_to_g(&r)?;
        Ok(Self { g, r })
    }
}

/// `R = (I - G)⁻¹`, refusing matrices that violate the stability condition.
pub fn g_to_r(g: &Matrix) -> Result<Matrix> {
    let d = g.nrows();
    let limit = 1.0 - STABILITY_MARGIN;
    let radius = spectral_radius(g)?;
    if radius >= limit {
        return Err(NphcError::StabilityViolation { radius, limit });
    }
    let (r, _) = linalg::invert(&(Matrix::identity(d, d) - g))?;
    Ok(r)
}

/// `G = I - R⁻¹`.
pub fn r_to_g(r: &Matrix) -> Result<Matrix> {
    let d = r.nrows();
    let (inv, cond) = linalg::invert(r)?;
    if cond > linalg::ILL_CONDITIONED {
        log::warn!("R is ill-conditioned (cond = {cond:.3e})");
    }
    Ok(Matrix::identity(d, d) - inv)
}

const POWER_MAX_ITERS: usize = 5_000;

/// Largest absolute eigenvalue.
///
/// Power iteration on `M²` from the all-ones vector handles a dominant real
/// eigenvalue or a `±λ` pair; when it does not settle (complex dominant
/// pair, or the start vector lies in an invariant subspace) the full
/// spectrum is computed from a real Schur decomposition instead.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    spectral_radius_with(m, POWER_MAX_ITERS)
}

pub fn spectral_radius_with(m: &Matrix, max_iters: usize) -> Result<f64> {
    if !m.is_square() {
        return Err(NphcError::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(NphcError::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let d = m.nrows();
    if d == 0 || m.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let nonneg = m.iter().all(|&x| x >= 0.0);
    let m2 = m * m;
    let mut x = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    for _ in 0..max_iters {
        let y = &m2 * &x;
        let s = y.norm();
        if s == 0.0 {
            // For a non-negative matrix M²ᵏ·1 = 0 implies M is nilpotent.
            if nonneg {
                return Ok(0.0);
            }
            break;
        }
        let resid = (&y - &x * x.dot(&y)).norm();
        x = y / s;
        if resid <= 1e-12 * s {
            return Ok(s.sqrt());
        }
    }
    schur_radius(m, max_iters)
}

fn schur_radius(m: &Matrix, max_iters: usize) -> Result<f64> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, max_iters.max(100))
        .ok_or(NphcError::NonConvergence {
            what: "spectral radius",
            iterations: max_iters,
        })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// `Λ = R μ`: the stationary mean intensity of a stable model.
pub fn theoretical_mean_intensity(model: &HawkesModel) -> Result<DVector<f64>> {
    let r = g_to_r(&model.integral_matrix())?;
    Ok(r * model.mu_vector())
}
