//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{NphcError, Result};

pub type Matrix = DMatrix<f64>;

/// Condition number above which inversions are reported as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

/// 1-norm (max absolute column sum).
pub fn norm_one(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius_sq(m: &Matrix) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Inverse through LU with partial pivoting, together with the 1-norm
/// condition number `‖A‖₁ ‖A⁻¹‖₁`.
pub fn invert(m: &Matrix) -> Result<(Matrix, f64)> {
    if !m.is_square() {
        return Err(NphcError::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(NphcError::singular("non-finite entries"));
    }
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| NphcError::singular("LU factorization has a zero pivot"))?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(NphcError::singular("inverse has non-finite entries"));
    }
    let cond = norm_one(m) * norm_one(&inv);
    if !cond.is_finite() || cond > 1e16 {
        return Err(NphcError::singular(format!("condition number {cond:.3e}")));
    }
    Ok((inv, cond))
}

/// Square root of the projection of a symmetric matrix on the PSD cone.
///
/// Negative eigenvalues are clipped at zero; the number of clipped
/// eigenvalues is returned alongside the root.
pub fn psd_sqrt(m: &Matrix) -> (Matrix, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut clipped = 0;
    let roots = eig.eigenvalues.map(|v| {
        if v < 0.0 {
            clipped += 1;
            0.0
        } else {
            v.sqrt()
        }
    });
    let q = &eig.eigenvectors;
    let root = q * Matrix::from_diagonal(&roots) * q.transpose();
    (root, clipped)
}

pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let d = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(d, c, |i, j| rows[i][j])
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_reports_condition() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let (inv, cond) = invert(&m).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((inv[(1, 1)] - 2.0).abs() < 1e-15);
        assert!((cond - 4.0).abs() < 1e-12);
    }

    #[test]
    fn invert_rejects_singular() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(invert(&m), Err(NphcError::SingularMatrix { .. })));
    }

    #[test]
    fn psd_sqrt_clips_negative_eigenvalues() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-4]);
        let (root, clipped) = psd_sqrt(&m);
        assert_eq!(clipped, 1);
        assert!((root[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(root[(1, 1)].abs() < 1e-12);
    }
}
