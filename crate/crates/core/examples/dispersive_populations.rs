//! Dispersive scheme: populations of the four inputs that matter.
//!
//! `|001⟩` makes a full round trip through `|100⟩`, `|110⟩` ends in `|011⟩`,
//! and `|101⟩`, `|111⟩` stay frozen. The exact evolution is compared with the
//! effective two-level dipole-dipole model at every sample.
//!
//! ```text
//! cargo run --release --example dispersive_populations -- [omega]
//! ```

use fredkin_cqed::hilbert::qubit_embedding;
use fredkin_cqed::model::{driven_hamiltonian, effective_dispersive};
use fredkin_cqed::{build_space, evolve_state, population_series, BasisLabel, DriveSchedule, EvolveOptions, PhysParams};
use nalgebra::Matrix2;

/// `|⟨target|exp(−iHt)|start⟩|²` for a real symmetric 2×2 `H`.
fn two_level(h: &Matrix2<f64>, t: f64, start: usize, target: usize) -> f64 {
    let eig = h.symmetric_eigen();
    let amp: num_complex::Complex64 = (0..2)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            num_complex::Complex64::from_polar(v[target] * v[start], -eig.eigenvalues[k] * t)
        })
        .sum();
    amp.norm_sqr()
}

fn main() -> fredkin_cqed::Result<()> {
    let omega = std::env::args().nth(1).map_or(0.02, |a| a.parse().expect("omega must be a number"));
    let params = PhysParams::dispersive();
    let schedule = DriveSchedule::dispersive(omega, params.g)?;
    let space = build_space(2, Some(2))?;
    let h = driven_hamiltonian(&space, &params, &schedule);
    let eff = effective_dispersive(omega, -omega, &params)?;
    let opts = EvolveOptions::default().with_samples(9);

    let cases = [("001", "100", Some((&eff.single, 1, 0))), ("110", "011", Some((&eff.double, 0, 1))), ("101", "101", None), ("111", "111", None)];
    println!("T = {:.2}/g", schedule.gate_time);
    for (start, watch, model) in cases {
        let label = BasisLabel::ket(start, "000");
        let psi = qubit_embedding(&space, label.qubit_index().unwrap())?;
        let traj = evolve_state(&h, &psi, schedule.gate_time, &opts)?;
        let table = population_series(&traj, &[label, BasisLabel::ket(watch, "000")])?;
        println!("from |{start}⟩ (watching |{watch}⟩)");
        for (s, t) in table.times.iter().enumerate() {
            let predicted = model.map(|(m, i, j)| two_level(m, *t, i, j));
            let text = predicted.map_or(String::new(), |p| format!("  effective {p:.4}"));
            println!("  t = {t:>8.1}/g  P(start) {:.4}  P(watch) {:.4}{text}", table.columns[0][s], table.columns[1][s]);
        }
    }
    Ok(())
}
