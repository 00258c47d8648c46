//! Spectral side of the two schemes.
//!
//! Shows the resonant interior eigensystem and its dark state, checks that
//! the Zeno projection of the full swap block reproduces the three-level
//! effective model, and compares the dispersive dipole-dipole couplings with
//! second-order perturbation theory.

use fredkin_cqed::model::{
    dispersive_eigensystem, effective_dispersive, effective_resonant, perturbative_couplings, resonant_block, resonant_eigensystem, zeno_hamiltonian,
    PhysParams,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn main() -> fredkin_cqed::Result<()> {
    let resonant = PhysParams::resonant();
    let es = resonant_eigensystem(&resonant)?;
    println!("resonant interior eigenvalues (units of g): {:?}", es.values);
    println!("  basis {:?}", es.basis_labels);
    println!("  dark vector {:?}", es.vector(0).as_slice());
    println!("  max residual {:.1e}", es.max_residual(&fredkin_cqed::model::resonant_interior(&resonant)));

    let omega = 0.05;
    let full = resonant_block(&resonant, omega, -omega).map(C64::from);
    let drive_free = resonant_block(&resonant, 0.0, 0.0).map(C64::from);
    let zeno = zeno_hamiltonian(&(&full - &drive_free), &drive_free, resonant.g)?;
    let dark = zeno.dark_restriction();
    let eff = effective_resonant(omega, -omega, resonant.g);
    // ⟨110|P0 H1 P0 P0 H1 P0|110⟩ equals the squared effective coupling to |D⟩
    let second: DMatrix<C64> = &dark * &dark;
    println!(
        "Zeno check: (P0 H1 P0)² on |110⟩ = {:.3e}, effective Ω²/3 = {:.3e}",
        second[(6, 6)].re,
        eff.matrix[(0, 2)].powi(2)
    );

    let dispersive = PhysParams::dispersive();
    let des = dispersive_eigensystem(dispersive.g, dispersive.j, dispersive.delta);
    println!("dispersive dressed energies (units of g): {:?}", des.values);
    let omega = 0.02;
    let closed = effective_dispersive(omega, -omega, &dispersive)?;
    let pert = perturbative_couplings(omega, -omega, &dispersive);
    println!("two-atom couplings   closed {:?}\n                     perturbative {:?}", closed.double.as_slice(), pert.double.as_slice());
    println!("single-atom couplings closed {:?}\n                     perturbative {:?}", closed.single.as_slice(), pert.single.as_slice());
    Ok(())
}
