//! Runs an experiment described by a `key = value` file, the same format the
//! `fredkin` binary reads, and lists the files it wrote.
//!
//! ```text
//! cargo run --release --example run_config -- crates/core/examples/configs/resonant_populations.cfg
//! ```

use fredkin_cqed::experiment::{run_experiment, ExperimentConfig};

fn main() -> fredkin_cqed::Result<()> {
    let path = std::env::args().nth(1).expect("usage: run_config <file.cfg>");
    let cfg = ExperimentConfig::from_file(path.as_ref())?;
    let summary = run_experiment(&cfg)?;
    for row in &summary.rows {
        println!("{row}");
    }
    for file in &summary.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}
