//! Exact recovery in one dimension: the cumulants of a process with g = 0.5
//! and mu = 1 are Lambda = 2, C = 8, Kc = 64.
//!
//!     cargo run --example scalar_fit

use nalgebra::DVector;
use nphc::prelude::*;

fn main() -> Result<()> {
    let cum = IntegratedCumulants::from_parts(
        DVector::from_element(1, 2.0),
        Matrix::from_element(1, 1, 8.0),
        Matrix::from_element(1, 1, 64.0),
    )?;
    let fit = solve(&cum, &SolveConfig::default())?;
    println!(
        "g_hat = {:.6}, mu_hat = {:.6}, kappa = {:.4}, {} iterations, final loss {:.3e}",
        fit.g_hat[(0, 0)],
        fit.mu_hat[0],
        fit.kappa,
        fit.iterations_used,
        fit.final_loss()
    );
    Ok(())
}
