//! Off-diagonal covariance against the window half-width: it grows while the
//! window is shorter than the kernels and then flattens out.
//!
//!     cargo run --release --example choose_window

use nphc::cumulants::scan_half_widths;
use nphc::prelude::*;

fn main() -> Result<()> {
    let g = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.5, 0.0]);
    let model = HawkesModel::exponential(vec![0.5, 0.5], &g, 0.2)?;
    let sim = simulate(&model, &SimulationConfig::new(5e5, 5))?;
    let hs = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    let exact = exact_cumulants(&g, &model.mu_vector())?;
    println!("exact C[1,0] = {:.4}", exact.c[(1, 0)]);
    println!("{:>8} {:>10}", "H", "C[1,0]");
    for (h, c) in scan_half_widths(&sim.events, &hs, BoundaryMode::Trimmed)? {
        println!("{h:>8} {:>10.4}", c[(1, 0)]);
    }
    Ok(())
}
