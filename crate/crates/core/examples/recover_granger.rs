//! End-to-end recovery of a block model from simulated data: simulate,
//! estimate cumulants, fit, score.
//!
//!     cargo run --release --example recover_granger -- [preset] [events per node] [runs]
//!
//! Defaults to exp10 with 1e5 events per node; the acceptance runs use 1e6.

use nphc::experiment::{self, heatmap_pair, summary_table, ExperimentConfig, Preset};
use nphc::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("exp10").parse()?;
    let mut cfg = ExperimentConfig::preset(preset);
    if let Some(n) = args.next() {
        cfg.events_per_node = n.parse().expect("events per node must be a number");
    } else {
        cfg.events_per_node = 1e5;
    }
    if let Some(r) = args.next() {
        cfg.runs = r.parse().expect("runs must be an integer");
    }

    let report = experiment::run(&cfg)?;
    print!("{}", summary_table(&report));
    let median = report.median_run();
    println!("\nmedian run (seed {}):", median.seed);
    print!("{}", heatmap_pair(&median.g_true, &median.fit.g_hat));
    Ok(())
}
