//! Builds the d = 10 exponential block model, simulates it and compares the
//! empirical rates with the stationary ones.
//!
//!     cargo run --release --example simulate_block_model

use nphc::experiment::heatmap;
use nphc::model::theoretical_mean_intensity;
use nphc::prelude::*;

fn main() -> Result<()> {
    let spec = BlockModelSpec::preset(10, KernelShape::Exponential, 0.05);
    let model = spec.build()?;
    let g = model.integral_matrix();
    println!("group sizes {:?}, spectral radius {:.3}", spec.layout.group_sizes, model.spectral_radius()?);
    println!("G (row i: effect of every node on i):\n{}", heatmap(&g, spec.alpha));

    let horizon = 2e4;
    let sim = simulate(&model, &SimulationConfig::new(horizon, 7))?;
    let expected = theoretical_mean_intensity(&model)?;
    println!("node  events  empirical rate  stationary rate");
    for (i, n) in sim.events.counts().iter().enumerate() {
        println!("{i:>4}  {n:>6}  {:>14.4}  {:>15.4}", *n as f64 / horizon, expected[i]);
    }
    Ok(())
}
