//! Recovery of `G` by matching integrated cumulants.
//!
//! For a candidate `R`, the covariance and contracted skewness implied by the
//! model are
//!
//! ```text
//! C(R)  = R L Rᵀ                                   L = diag(Λ̂)
//! Kc(R) = (R⊙R) Ĉᵀ + 2 [R ⊙ (Ĉ - R L)] Rᵀ
//! ```
//!
//! and the objective is
//! `(1-κ) ‖Kc(R) - K̂c‖²_F + κ ‖C(R) - Ĉ‖²_F` with
//! `κ = ‖K̂c‖² / (‖K̂c‖² + ‖Ĉ‖²)`, a degree-6 polynomial in `R`. It is
//! minimised by full-batch AdaGrad starting from `Ĉ^{1/2} L^{-1/2}`, and the
//! answer is `Ĝ = I - R̂⁻¹`, `μ̂ = R̂⁻¹ Λ̂`.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cumulants::IntegratedCumulants;
use crate::error::{NphcError, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    pub adagrad_epsilon: f64,
    /// Stop once the gradient Frobenius norm (of the rate-normalised
    /// objective) drops below this.
    pub grad_tol: f64,
    /// Fixed `κ` instead of the norm-ratio choice.
    pub kappa_override: Option<f64>,
    pub seed: u64,
    /// Record the loss every `trace_stride` iterations (the last one always).
    pub trace_stride: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            learning_rate: 0.1,
            adagrad_epsilon: 1e-8,
            grad_tol: 1e-8,
            kappa_override: None,
            seed: 0,
            trace_stride: 1,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NphcError::InvalidParameter(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(self.adagrad_epsilon >= 0.0) {
            return bad(format!("adagrad_epsilon must be >= 0, got {}", self.adagrad_epsilon));
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol must be >= 0, got {}", self.grad_tol));
        }
        if let Some(k) = self.kappa_override {
            if !(0.0..=1.0).contains(&k) {
                return bad(format!("kappa must lie in [0, 1], got {k}"));
            }
        }
        if self.trace_stride == 0 {
            return bad("trace_stride must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub r_hat: Matrix,
    pub g_hat: Matrix,
    pub mu_hat: DVector<f64>,
    pub kappa: f64,
    /// `(iteration, loss)`, loss in the units of the input cumulants.
    pub loss_trace: Vec<(usize, f64)>,
    pub final_grad_norm: f64,
    pub condition_number_r: f64,
    pub iterations_used: usize,
    /// Stopped on the gradient threshold rather than `max_iters`.
    pub converged: bool,
    /// Negative eigenvalues of `Ĉ` clipped by the initialisation.
    pub clipped_eigenvalues: usize,
    pub elapsed_secs: f64,
}

impl SolveResult {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().map_or(f64::NAN, |&(_, l)| l)
    }
}

fn scale_columns(r: &Matrix, v: &DVector<f64>) -> Matrix {
    let mut out = r.clone();
    for (mut col, &s) in out.column_iter_mut().zip(v.iter()) {
        col *= s;
    }
    out
}

/// `C(R) = R diag(Λ) Rᵀ`.
pub fn forward_covariance(r: &Matrix, lambda: &DVector<f64>) -> Matrix {
    scale_columns(r, lambda) * r.transpose()
}

/// `Kc(R) = (R⊙R) Cᵀ + 2 [R ⊙ (C - R diag(Λ))] Rᵀ`, i.e. `K^{iij}` of the
/// third-cumulant identity with `C` given.
pub fn forward_skewness_contracted(r: &Matrix, c: &Matrix, lambda: &DVector<f64>) -> Matrix {
    let rl = scale_columns(r, lambda);
    let m = r.component_mul(&(c - rl));
    r.component_mul(r) * c.transpose() + (m * r.transpose()) * 2.0
}

/// `κ = ‖K̂c‖² / (‖K̂c‖² + ‖Ĉ‖²)`.
pub fn compute_kappa(c_hat: &Matrix, kc_hat: &Matrix) -> Result<f64> {
    let k2 = linalg::frobenius_sq(kc_hat);
    let c2 = linalg::frobenius_sq(c_hat);
    if k2 + c2 == 0.0 || !(k2 + c2).is_finite() {
        return Err(NphcError::DegenerateCumulants(
            "both Ĉ and K̂c vanish; κ is undefined".into(),
        ));
    }
    Ok(k2 / (k2 + c2))
}

struct Objective<'a> {
    lambda: &'a DVector<f64>,
    c: &'a Matrix,
    kc: &'a Matrix,
    kappa: f64,
}

impl<'a> Objective<'a> {
    fn new(cum: &'a IntegratedCumulants, kappa: f64) -> Self {
        Self {
            lambda: &cum.lambda,
            c: &cum.c,
            kc: &cum.kc,
            kappa,
        }
    }

    fn loss(&self, r: &Matrix) -> f64 {
        let rl = scale_columns(r, self.lambda);
        let e = &rl * r.transpose() - self.c;
        let m = r.component_mul(&(self.c - &rl));
        let a = r.component_mul(r) * self.c.transpose() + (m * r.transpose()) * 2.0 - self.kc;
        (1.0 - self.kappa) * linalg::frobenius_sq(&a) + self.kappa * linalg::frobenius_sq(&e)
    }

    fn loss_and_gradient(&self, r: &Matrix) -> (f64, Matrix) {
        let rt = r.transpose();
        let rl = scale_columns(r, self.lambda);
        let e = &rl * &rt - self.c;
        let c_minus_rl = self.c - &rl;
        let m = r.component_mul(&c_minus_rl);
        let a = r.component_mul(r) * self.c.transpose() + (&m * &rt) * 2.0 - self.kc;
        let loss =
            (1.0 - self.kappa) * linalg::frobenius_sq(&a) + self.kappa * linalg::frobenius_sq(&e);

        let ar = &a * r;
        let grad_k = r.component_mul(&(&a * self.c)) + a.transpose() * &m
            + ar.component_mul(&c_minus_rl)
            - scale_columns(&ar.component_mul(r), self.lambda);
        let grad_c = (&e + e.transpose()) * &rl;
        let grad = grad_k * (4.0 * (1.0 - self.kappa)) + grad_c * (2.0 * self.kappa);
        (loss, grad)
    }
}

/// The weighted moment-matching objective at `R`.
pub fn loss(r: &Matrix, cum: &IntegratedCumulants, kappa: f64) -> f64 {
    Objective::new(cum, kappa).loss(r)
}

/// Exact gradient of [`loss`] with respect to `R`.
pub fn loss_gradient(r: &Matrix, cum: &IntegratedCumulants, kappa: f64) -> Matrix {
    Objective::new(cum, kappa).loss_and_gradient(r).1
}

/// Starting point `Ĉ₊^{1/2} diag(Λ̂)^{-1/2}`, with `Ĉ₊` the PSD projection of
/// `Ĉ`. Also returns how many eigenvalues were clipped.
pub fn initial_point_with_diagnostics(cum: &IntegratedCumulants) -> Result<(Matrix, usize)> {
    if let Some((i, l)) = cum
        .lambda
        .iter()
        .enumerate()
        .find(|(_, l)| !(l.is_finite() && **l > 0.0))
    {
        return Err(NphcError::DegenerateCumulants(format!(
            "mean intensity of node {i} is {l}; every node needs events"
        )));
    }
    let (root, clipped) = linalg::psd_sqrt(&cum.c);
    if clipped > 0 {
        log::info!("clipped {clipped} negative eigenvalue(s) of Ĉ");
    }
    let inv_sqrt = cum.lambda.map(|l| 1.0 / l.sqrt());
    Ok((scale_columns(&root, &inv_sqrt), clipped))
}

pub fn initial_point(cum: &IntegratedCumulants) -> Result<Matrix> {
    Ok(initial_point_with_diagnostics(cum)?.0)
}

/// Minimises the objective and returns `R̂`, `Ĝ`, `μ̂` with diagnostics.
///
/// Cumulants are divided by the mean of `Λ̂` before optimising (the objective
/// is homogeneous of degree 2 in the cumulants, so the minimiser does not
/// change) which makes `grad_tol` independent of the event rate.
pub fn solve(cum: &IntegratedCumulants, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let start = Instant::now();
    let d = cum.dim();
    let kappa = match cfg.kappa_override {
        Some(k) => k,
        None => compute_kappa(&cum.c, &cum.kc)?,
    };
    let (mut r, clipped) = initial_point_with_diagnostics(cum)?;
    let scale = cum.lambda.mean();
    let normalised = cum.scaled(1.0 / scale);
    let objective = Objective::new(&normalised, kappa);
    let unit = scale * scale;

    let mut accum = Matrix::zeros(d, d);
    let mut trace = Vec::new();
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_loss = f64::NAN;
    for it in 0..cfg.max_iters {
        let (l, g) = objective.loss_and_gradient(&r);
        if !l.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(NphcError::NonFinite { iteration: it });
        }
        last_loss = l;
        grad_norm = g.norm();
        iterations = it;
        if it % cfg.trace_stride == 0 {
            trace.push((it, l * unit));
        }
        if grad_norm < cfg.grad_tol {
            converged = true;
            break;
        }
        accum += g.component_mul(&g);
        let step = g.zip_map(&accum, |gi, si| {
            cfg.learning_rate * gi / (si.sqrt() + cfg.adagrad_epsilon)
        });
        r -= step;
        iterations = it + 1;
    }
    if !converged {
        let (l, g) = objective.loss_and_gradient(&r);
        if !l.is_finite() {
            return Err(NphcError::NonFinite {
                iteration: iterations,
            });
        }
        last_loss = l;
        grad_norm = g.norm();
    }
    if trace.last().map(|&(i, _)| i) != Some(iterations) {
        trace.push((iterations, last_loss * unit));
    }

    let (r_inv, cond) = linalg::invert(&r)?;
    if cond > linalg::ILL_CONDITIONED {
        log::warn!("R̂ is ill-conditioned (cond = {cond:.3e})");
    }
    let g_hat = Matrix::identity(d, d) - &r_inv;
    let mu_hat = &r_inv * &cum.lambda;
    Ok(SolveResult {
        r_hat: r,
        g_hat,
        mu_hat,
        kappa,
        loss_trace: trace,
        final_grad_norm: grad_norm * unit,
        condition_number_r: cond,
        iterations_used: iterations,
        converged,
        clipped_eigenvalues: clipped,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Exact integrated cumulants `(Λ, C, Kc)` of a model given `G` and `μ`.
pub fn exact_cumulants(g: &Matrix, mu: &DVector<f64>) -> Result<IntegratedCumulants> {
    let r = crate::model::g_to_r(g)?;
    let lambda = &r * mu;
    let c = forward_covariance(&r, &lambda);
    let kc = forward_skewness_contracted(&r, &c, &lambda);
    IntegratedCumulants::from_parts(lambda, c, kc)
}
