//! Fidelities with the dissipation rates of two cavity platforms, at the
//! default drives (`Ω_max = 0.05 g` resonant, `Ω = 0.02 g` dispersive).
//!
//! ```text
//! cargo run --release --example experimental_presets
//! ```

use fredkin_cqed::experiment::{default_drive, presets};
use fredkin_cqed::{average_gate_fidelity, fredkin_ideal, reconstruct_channel, DecayParams, GateConfig, Scheme};

fn main() -> fredkin_cqed::Result<()> {
    for p in presets() {
        println!("{} ({}): kappa/g = {:.3e}, gamma/g = {:.3e}", p.name, p.description, p.kappa_over_g, p.gamma_over_g);
        let decay = DecayParams::new(p.kappa_over_g, p.gamma_over_g)?;
        for scheme in [Scheme::Resonant, Scheme::Dispersive] {
            let cfg = GateConfig::for_scheme(scheme, default_drive(scheme)).with_decay(decay);
            let channel = reconstruct_channel(&cfg)?;
            let f = average_gate_fidelity(&channel, &fredkin_ideal())?;
            println!("  {scheme:<10} F = {f:.4}  leakage {:.2e}", channel.leakage);
        }
    }
    Ok(())
}
