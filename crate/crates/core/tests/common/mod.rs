#![allow(dead_code)]

use nalgebra::DVector;
use nphc::cumulants::{brute_force_cumulants, estimate_cumulants, BoundaryMode, CumulantConfig, IntegratedCumulants};
use nphc::estimator::{loss, loss_gradient};
use nphc::prelude::*;
use rand::Rng;

/// Random event sets with `d ≤ 4` nodes and at most `max_events` events in
/// total, plus a half-width that is valid for both boundary modes. Rates stay
/// around one event per unit time so cumulant entries are of moderate size.
pub fn random_dataset<R: Rng>(rng: &mut R, max_events: usize) -> (EventSequences, f64) {
    let d = rng.random_range(1..=4);
    let total = rng.random_range(0..=max_events);
    let horizon = rng.random_range(0.5..1.0) * (total as f64).max(50.0);
    let mut events = vec![Vec::new(); d];
    for _ in 0..total {
        let node = rng.random_range(0..d);
        // clustered timestamps make window overlaps frequent
        let t = if rng.random_bool(0.3) && !events[node].is_empty() {
            let base: f64 = events[node][rng.random_range(0..events[node].len())];
            (base + rng.random_range(-1.0..1.0)).clamp(0.0, horizon)
        } else {
            rng.random_range(0.0..horizon)
        };
        events[node].push(t);
    }
    for v in &mut events {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let h = rng.random_range(0.5..(horizon / 4.5).min(10.0));
    (EventSequences::new(events, horizon).unwrap(), h)
}

/// Largest absolute difference between the fast and brute-force estimators
/// over both boundary modes and both symmetrisation settings.
pub fn oracle_gap(events: &EventSequences, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for mode in [BoundaryMode::Trimmed, BoundaryMode::PaperExact] {
        for sym in [true, false] {
            let cfg = CumulantConfig::new(h).with_mode(mode).with_symmetrize(sym);
            let fast = estimate_cumulants(events, &cfg).unwrap();
            let slow = brute_force_cumulants(events, &cfg).unwrap();
            worst = worst
                .max((&fast.lambda - &slow.lambda).amax())
                .max((&fast.c - &slow.c).amax())
                .max((&fast.kc - &slow.kc).amax());
        }
    }
    worst
}

pub fn finite_difference(r: &Matrix, cum: &IntegratedCumulants, kappa: f64, h: f64) -> Matrix {
    let d = r.nrows();
    Matrix::from_fn(d, d, |i, j| {
        let mut plus = r.clone();
        plus[(i, j)] += h;
        let mut minus = r.clone();
        minus[(i, j)] -= h;
        (loss(&plus, cum, kappa) - loss(&minus, cum, kappa)) / (2.0 * h)
    })
}

/// Relative Frobenius gap between the analytic gradient and central finite
/// differences at a random point of a random instance with `d ≤ 5`.
pub fn gradient_gap<R: Rng>(rng: &mut R) -> f64 {
    let d = rng.random_range(1..=5);
    let lambda = DVector::from_fn(d, |_, _| rng.random_range(0.2..3.0));
    let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let c = &a * a.transpose() + Matrix::from_diagonal(&lambda);
    let kc = Matrix::from_fn(d, d, |_, _| rng.random_range(-2.0..4.0));
    let cum = IntegratedCumulants::from_parts(lambda, c, kc).unwrap();
    let r = Matrix::identity(d, d) + Matrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
    let kappa = rng.random_range(0.0..=1.0);
    let g = loss_gradient(&r, &cum, kappa);
    let fd = finite_difference(&r, &cum, kappa, 1e-5);
    (&g - &fd).norm() / g.norm().max(1e-300)
}
