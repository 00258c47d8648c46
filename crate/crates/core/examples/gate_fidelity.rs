//! Average gate fidelity of both schemes without dissipation.
//!
//! ```text
//! cargo run --release --example gate_fidelity -- [omega_resonant] [omega_dispersive]
//! ```

use std::time::Instant;

use fredkin_cqed::{average_gate_fidelity, fredkin_ideal, reconstruct_channel, GateConfig};

fn main() -> fredkin_cqed::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("drive must be a number"));
    let resonant = args.next().unwrap_or(0.05);
    let dispersive = args.next().unwrap_or(0.02);
    for cfg in [GateConfig::resonant(resonant), GateConfig::dispersive(dispersive)] {
        let start = Instant::now();
        let channel = reconstruct_channel(&cfg)?;
        let f = average_gate_fidelity(&channel, &fredkin_ideal())?;
        println!(
            "{:<10} drive {:.4} g  T = {:>9.2}/g  F = {:.6}  leakage {:.2e}  ({:.2?})",
            cfg.scheme.to_string(),
            cfg.drive,
            channel.gate_time,
            f,
            channel.leakage,
            start.elapsed()
        );
    }
    Ok(())
}
