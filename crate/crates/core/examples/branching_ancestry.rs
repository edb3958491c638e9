//! Every simulated event records its direct parent. The fraction of events
//! of node j that trigger an event of node i estimates g^{ij}.
//!
//!     cargo run --release --example branching_ancestry

use nphc::prelude::*;

fn main() -> Result<()> {
    let g = Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.4, 0.2]);
    let model = HawkesModel::exponential(vec![1.0, 0.5], &g, 1.0)?;
    let sim = simulate(&model, &SimulationConfig::new(1e4, 77).with_ancestry())?;
    let counts = sim.ancestor_counts().expect("ancestry was tracked");
    let n = sim.events.counts();
    println!(" i  j   g^ij   N(i<-j)/N(j)   z");
    for i in 0..2 {
        for j in 0..2 {
            let ratio = counts[(i, j)] / n[j] as f64;
            let se = (g[(i, j)] / n[j] as f64).sqrt();
            println!("{i:>2} {j:>2}  {:.3}  {ratio:>12.4}  {:>5.2}", g[(i, j)], (ratio - g[(i, j)]) / se);
        }
    }
    Ok(())
}
