//! The two scores used to compare an estimate with the true kernel integrals.
//!
//!     cargo run --example metrics

use nphc::prelude::*;

fn main() -> Result<()> {
    let truth = Matrix::from_row_slice(3, 3, &[0.2, 0.0, 0.1, 0.0, 0.3, 0.0, 0.4, 0.0, 0.1]);
    let close = Matrix::from_row_slice(3, 3, &[0.19, 0.01, 0.12, -0.02, 0.28, 0.0, 0.37, 0.03, 0.1]);
    let swapped = truth.transpose();
    for (name, est) in [("truth", &truth), ("close", &close), ("transposed", &swapped)] {
        println!(
            "{name:>10}: RelErr {:.4}, MRankCorr {:+.4}",
            rel_err(&truth, est)?,
            mean_rank_corr(&truth, est)?
        );
    }
    // tied entries count as neither concordant nor discordant, so even the
    // truth scores below 1 when rows contain repeated values
    Ok(())
}
