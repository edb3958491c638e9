//! Scores comparing an estimated kernel-integral matrix with the truth.

use crate::error::{NphcError, Result};
use crate::linalg::Matrix;

/// Entries with `|a| ≤ ZERO_TOL` count as zero in [`rel_err`].
pub const ZERO_TOL: f64 = 1e-12;

fn same_square_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(NphcError::ShapeMismatch {
            expected: format!("two square matrices of shape {:?}", a.shape()),
            got: format!("{:?} and {:?}", a.shape(), b.shape()),
        });
    }
    Ok(())
}

/// Mean relative error over all entries; where the truth is zero the
/// absolute value of the estimate is used instead.
pub fn rel_err(truth: &Matrix, estimate: &Matrix) -> Result<f64> {
    same_square_shape(truth, estimate)?;
    let n = truth.len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = truth
        .iter()
        .zip(estimate.iter())
        .map(|(&a, &b)| {
            if a.abs() <= ZERO_TOL {
                b.abs()
            } else {
                (a - b).abs() / a.abs()
            }
        })
        .sum();
    Ok(total / n as f64)
}

/// Kendall correlation without tie correction:
/// `2 (concordant - discordant) / (n (n-1))`. Pairs tied in either vector
/// count as neither.
pub fn rank_corr(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    debug_assert_eq!(n, y.len());
    if n < 2 {
        return 0.0;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            if x[i] == x[j] || y[i] == y[j] {
                continue;
            }
            score += if (x[i] > x[j]) == (y[i] > y[j]) { 1 } else { -1 };
        }
    }
    2.0 * score as f64 / (n * (n - 1)) as f64
}

/// Row-averaged [`rank_corr`].
pub fn mean_rank_corr(truth: &Matrix, estimate: &Matrix) -> Result<f64> {
    same_square_shape(truth, estimate)?;
    let d = truth.nrows();
    if d < 2 {
        return Err(NphcError::DimensionTooSmall(d));
    }
    let total: f64 = (0..d)
        .map(|i| {
            let x: Vec<f64> = truth.row(i).iter().copied().collect();
            let y: Vec<f64> = estimate.row(i).iter().copied().collect();
            rank_corr(&x, &y)
        })
        .sum();
    Ok(total / d as f64)
}
