//! Fidelity against dissipation with `γ = κ`, three drives per scheme.
//!
//! Each point reconstructs the channel from density-matrix blocks, so the
//! weakest dispersive drive (gate time about 7850/g) dominates the runtime.
//!
//! ```text
//! cargo run --release --example decay_sweep -- [kappa_max] [points]
//! ```

use fredkin_cqed::experiment::{sweep, ExperimentConfig, SweepParam, SweepSpec, Task};
use fredkin_cqed::Scheme;

fn main() {
    let mut args = std::env::args().skip(1);
    let to = args.next().map_or(0.01, |a| a.parse().expect("kappa_max must be a number"));
    let points = args.next().map_or(3, |a| a.parse().expect("points must be an integer"));
    let spec = SweepSpec {
        param: SweepParam::KappaGamma,
        from: 0.0,
        to,
        points,
    };
    let cfg = ExperimentConfig {
        task: Task::Sweep,
        schemes: vec![Scheme::Resonant, Scheme::Dispersive],
        omega_over_g: Some(vec![0.02, 0.05, 0.1]),
        sweep: Some(spec.clone()),
        ..ExperimentConfig::default()
    };
    let mut last = None;
    for row in sweep(&cfg, &spec) {
        if last != row.param {
            println!("kappa = gamma = {} g", row.param.unwrap_or(0.0));
            last = row.param;
        }
        println!("  {row}");
    }
}
