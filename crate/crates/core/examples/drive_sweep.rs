//! Fidelity against drive strength for both schemes, without dissipation.
//!
//! The resonant scheme stays above 99% across the grid, the dispersive one
//! degrades and oscillates as the drive leaves the Zeno regime.
//!
//! ```text
//! cargo run --release --example drive_sweep -- [points]
//! ```

use fredkin_cqed::experiment::{sweep, ExperimentConfig, SweepParam, SweepSpec, Task};
use fredkin_cqed::Scheme;

fn main() {
    let points = std::env::args().nth(1).map_or(9, |a| a.parse().expect("points must be an integer"));
    let spec = SweepSpec {
        param: SweepParam::Omega,
        from: 0.02,
        to: 0.1,
        points,
    };
    let cfg = ExperimentConfig {
        task: Task::Sweep,
        schemes: vec![Scheme::Resonant, Scheme::Dispersive],
        sweep: Some(spec.clone()),
        ..ExperimentConfig::default()
    };
    for row in sweep(&cfg, &spec) {
        println!("{row}");
    }
}
