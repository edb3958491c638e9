//! Integrated cumulants of a simulated two-node process against their exact
//! values, for both boundary treatments.
//!
//!     cargo run --release --example estimate_cumulants

use nalgebra::DVector;
use nphc::prelude::*;

fn main() -> Result<()> {
    let g = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.4, 0.3]);
    let mu = DVector::from_vec(vec![0.2, 0.2]);
    let model = HawkesModel::exponential(mu.iter().copied().collect(), &g, 1.0)?;
    let exact = exact_cumulants(&g, &mu)?;
    let sim = simulate(&model, &SimulationConfig::new(2e5, 3))?;
    println!("{} events", sim.events.total_events());
    println!("exact:\n  lambda {:.4}\n  C {:.4}\n  Kc {:.4}", exact.lambda.transpose(), exact.c, exact.kc);

    for mode in [BoundaryMode::Trimmed, BoundaryMode::PaperExact] {
        let cum = estimate_cumulants(&sim.events, &CumulantConfig::new(20.0).with_mode(mode))?;
        println!("{}:", mode.name());
        println!("  lambda {:.4}", cum.lambda.transpose());
        println!("  C {:.4}", cum.c);
        println!("  Kc {:.4}", cum.kc);
    }
    Ok(())
}
