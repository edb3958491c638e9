//! Writes a simulated path as `node_id,timestamp` CSV, reads it back and
//! checks that the cumulants are unchanged.
//!
//!     cargo run --example events_io

use nphc::io::{format_events_csv, parse_events_csv, IngestOptions};
use nphc::prelude::*;

fn main() -> Result<()> {
    let g = Matrix::from_row_slice(2, 2, &[0.2, 0.1, 0.3, 0.2]);
    let model = HawkesModel::exponential(vec![0.5, 0.5], &g, 1.0)?;
    let sim = simulate(&model, &SimulationConfig::new(1e3, 1))?;
    let text = format_events_csv(&sim.events);
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));

    let opts = IngestOptions { horizon: Some(1e3), nodes: Some(2) };
    let back = parse_events_csv(text.as_bytes(), opts)?;
    assert_eq!(back, sim.events);
    let cfg = CumulantConfig::new(5.0);
    let a = estimate_cumulants(&sim.events, &cfg)?;
    let b = estimate_cumulants(&back, &cfg)?;
    println!("... {} events round-tripped, identical cumulants: {}", back.total_events(), a == b);
    Ok(())
}
