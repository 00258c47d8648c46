//! Three-qubit channel reconstruction and average gate fidelity.
//!
//! The channel `ε` maps a qubit operator to the qubit block of the evolved
//! system: embed with cavities in vacuum, propagate over the gate time, trace
//! out the cavities and drop every component involving `|e⟩`. It is fixed by
//! the 64 images `ε(|m⟩⟨n|)`; by Hermiticity of the generator only the 36
//! with `m ≤ n` are propagated.
//!
//! Each matrix unit `|m⟩⟨n|` only ever has rows in the invariant closure of
//! `|m⟩` and columns in that of `|n⟩` (closures over the Hamiltonian terms and
//! jump operators), so units are evolved as small rectangular blocks. Without
//! dissipation the eight basis kets are propagated instead and the images are
//! formed from outer products.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{build_space, extract_block, BasisLabel, HilbertSpace, QubitMatrix, QUBIT_DIM};
use crate::model::{driven_hamiltonian, PhysParams};
use crate::propagate::{closure, evolve_density_block, evolve_ket_block, DecayParams, EvolveOptions, Method, Side, TimeDependentHamiltonian};
use crate::pulses::{DriveSchedule, PulseShape};

const IMAGINARY_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `Δ = 0`, `J = g`, adiabatic dark-state transfer.
    Resonant,
    /// `Δ = J = g`, constant drive, second-order dipole-dipole exchange.
    Dispersive,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Resonant => "resonant",
            Scheme::Dispersive => "dispersive",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "resonant" => Ok(Scheme::Resonant),
            "dispersive" => Ok(Scheme::Dispersive),
            other => Err(Error::config("scheme", format!("unknown scheme '{other}'"))),
        }
    }
}

/// Everything needed to simulate one gate. Frequencies and times are in
/// units of `g` and `1/g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub scheme: Scheme,
    pub params: PhysParams,
    /// `Ω_max` for adiabatic pulses, `Ω` for constant ones.
    pub drive: f64,
    pub pulse: PulseShape,
    pub decay: DecayParams,
    pub fock_cap: usize,
    /// `None` keeps the full product space.
    pub sector_cap: Option<usize>,
    pub evolve: EvolveOptions,
}

impl GateConfig {
    pub fn resonant(omega_max: f64) -> Self {
        Self {
            scheme: Scheme::Resonant,
            params: PhysParams::resonant(),
            drive: omega_max,
            pulse: PulseShape::Adiabatic,
            decay: DecayParams::none(),
            fock_cap: 2,
            sector_cap: Some(2),
            evolve: EvolveOptions::default().with_method(Method::Auto),
        }
    }

    pub fn dispersive(omega: f64) -> Self {
        Self {
            scheme: Scheme::Dispersive,
            params: PhysParams::dispersive(),
            drive: omega,
            pulse: PulseShape::Constant,
            ..Self::resonant(omega)
        }
    }

    pub fn for_scheme(scheme: Scheme, drive: f64) -> Self {
        match scheme {
            Scheme::Resonant => Self::resonant(drive),
            Scheme::Dispersive => Self::dispersive(drive),
        }
    }

    pub fn with_decay(self, decay: DecayParams) -> Self {
        Self { decay, ..self }
    }

    pub fn with_evolve(self, evolve: EvolveOptions) -> Self {
        Self { evolve, ..self }
    }

    pub fn with_space(self, fock_cap: usize, sector_cap: Option<usize>) -> Self {
        Self {
            fock_cap,
            sector_cap,
            ..self
        }
    }

    pub fn schedule(&self) -> Result<DriveSchedule> {
        self.params.validate()?;
        match (self.scheme, self.pulse) {
            (Scheme::Resonant, PulseShape::Adiabatic) => DriveSchedule::adiabatic(self.drive),
            (Scheme::Resonant, PulseShape::Constant) => DriveSchedule::resonant_constant(self.drive),
            (Scheme::Dispersive, PulseShape::Constant) => DriveSchedule::dispersive(self.drive, self.params.g),
            (Scheme::Dispersive, PulseShape::Adiabatic) => Err(Error::config(
                "pulse",
                "the dispersive scheme has no adiabatic gate-time rule; use a constant pulse",
            )),
        }
    }

    pub fn space(&self) -> Result<Arc<HilbertSpace>> {
        build_space(self.fock_cap, self.sector_cap)
    }

    pub fn hamiltonian(&self, space: &Arc<HilbertSpace>) -> Result<TimeDependentHamiltonian> {
        Ok(driven_hamiltonian(space, &self.params, &self.schedule()?))
    }
}

/// Linear map on three-qubit operators stored as its 64 matrix-unit images.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    images: Vec<QubitMatrix>,
    /// Mean population left outside the qubit block, over the 8 basis inputs.
    pub leakage: f64,
    /// Largest `|tr ρ(T) − 1|` over the 8 basis inputs, before extraction.
    pub trace_drift: f64,
    pub gate_time: f64,
}

impl QuantumChannel {
    /// Builds from images indexed as `images[8 m + n] = ε(|m⟩⟨n|)`.
    pub fn from_images(images: Vec<QubitMatrix>) -> Result<Self> {
        if images.len() != QUBIT_DIM * QUBIT_DIM {
            return Err(Error::DimensionMismatch {
                expected: QUBIT_DIM * QUBIT_DIM,
                got: images.len(),
            });
        }
        let leakage = (0..QUBIT_DIM).map(|q| 1.0 - images[q * QUBIT_DIM + q].trace().re).sum::<f64>() / QUBIT_DIM as f64;
        Ok(Self {
            images,
            leakage,
            trace_drift: 0.0,
            gate_time: 0.0,
        })
    }

    pub fn identity() -> Self {
        Self::from_unitary(&QubitMatrix::identity())
    }

    pub fn from_unitary(u: &QubitMatrix) -> Self {
        let images = matrix_units().map(|e| u * e * u.adjoint()).collect();
        Self::from_images(images).unwrap()
    }

    /// `ρ ↦ (1 − p) ρ + p tr(ρ) I/8`.
    pub fn depolarizing(p: f64) -> Self {
        let images = matrix_units()
            .map(|e| e * C64::from(1.0 - p) + QubitMatrix::identity() * (e.trace() * p / QUBIT_DIM as f64))
            .collect();
        Self::from_images(images).unwrap()
    }

    pub fn image(&self, m: usize, n: usize) -> &QubitMatrix {
        &self.images[m * QUBIT_DIM + n]
    }

    pub fn images(&self) -> &[QubitMatrix] {
        &self.images
    }

    pub fn apply(&self, rho: &QubitMatrix) -> QubitMatrix {
        let mut out = QubitMatrix::zeros();
        for m in 0..QUBIT_DIM {
            for n in 0..QUBIT_DIM {
                let w = rho[(m, n)];
                if w != C64::new(0.0, 0.0) {
                    out += self.image(m, n) * w;
                }
            }
        }
        out
    }

    /// `Σ_{mn} |m⟩⟨n| ⊗ ε(|m⟩⟨n|)`, rows indexed `8 m + i`.
    pub fn choi(&self) -> DMatrix<C64> {
        let d = QUBIT_DIM;
        let mut out = DMatrix::zeros(d * d, d * d);
        for m in 0..d {
            for n in 0..d {
                let img = self.image(m, n);
                for i in 0..d {
                    for j in 0..d {
                        out[(m * d + i, n * d + j)] = img[(i, j)];
                    }
                }
            }
        }
        out
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let c = self.choi();
        let h = (&c + c.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn matrix_units() -> impl Iterator<Item = QubitMatrix> {
    (0..QUBIT_DIM * QUBIT_DIM).map(|k| {
        let mut e = QubitMatrix::zeros();
        e[(k / QUBIT_DIM, k % QUBIT_DIM)] = C64::new(1.0, 0.0);
        e
    })
}

/// Ideal gate: swaps `|011⟩` and `|110⟩` (control-first) and fixes the rest.
pub fn fredkin_ideal() -> QubitMatrix {
    let mut u = QubitMatrix::zeros();
    for q in 0..QUBIT_DIM {
        let image = match q {
            5 => 6,
            6 => 5,
            q => q,
        };
        u[(image, q)] = C64::new(1.0, 0.0);
    }
    u
}

fn paulis() -> [Matrix2<C64>; 4] {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

/// The 64 tensors `P_a ⊗ P_b ⊗ P_c` over `{I, X, Y, Z}`, acting on
/// (control, first target, second target) and ordered lexicographically.
pub fn pauli_tensor_basis() -> Vec<QubitMatrix> {
    let p = paulis();
    let mut out = Vec::with_capacity(64);
    for a in &p {
        for b in &p {
            for c in &p {
                out.push(QubitMatrix::from_fn(|r, s| {
                    a[(r >> 2, s >> 2)] * b[((r >> 1) & 1, (s >> 1) & 1)] * c[(r & 1, s & 1)]
                }));
            }
        }
    }
    out
}

/// `F̄ = [Σ_j tr(U U_j† U† ε(U_j)) + 64] / 576` over the Pauli tensors.
pub fn average_gate_fidelity(channel: &QuantumChannel, target: &QubitMatrix) -> Result<f64> {
    let d = QUBIT_DIM as f64;
    let mut sum = C64::new(0.0, 0.0);
    for uj in pauli_tensor_basis() {
        sum += (target * uj.adjoint() * target.adjoint() * channel.apply(&uj)).trace();
    }
    let value = (sum + C64::from(d * d)) / (d * d * (d + 1.0));
    if value.im.abs() >= IMAGINARY_LIMIT {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}

/// Entanglement (process) fidelity `⟨Φ_U| J(ε) |Φ_U⟩ / d²` from the Choi
/// matrix, where `|Φ_U⟩ = Σ_m |m⟩ ⊗ U|m⟩`.
pub fn process_fidelity(channel: &QuantumChannel, target: &QubitMatrix) -> f64 {
    let d = QUBIT_DIM;
    let mut phi = nalgebra::DVector::<C64>::zeros(d * d);
    for m in 0..d {
        for i in 0..d {
            phi[m * d + i] = target[(i, m)];
        }
    }
    let value = phi.adjoint() * channel.choi() * &phi;
    value[(0, 0)].re / (d * d) as f64
}

/// `(d F_pro + 1) / (d + 1)`.
pub fn average_from_process(f_pro: f64) -> f64 {
    let d = QUBIT_DIM as f64;
    (d * f_pro + 1.0) / (d + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    /// Kets when there is no dissipation, density blocks otherwise.
    Auto,
    Unitary,
    Density,
}

/// Simulates the gate described by `config` and returns its channel.
pub fn reconstruct_channel(config: &GateConfig) -> Result<QuantumChannel> {
    reconstruct_via(config, Path::Auto)
}

/// Like [`reconstruct_channel`] but always through density-matrix blocks.
pub fn reconstruct_channel_density(config: &GateConfig) -> Result<QuantumChannel> {
    reconstruct_via(config, Path::Density)
}

pub fn reconstruct_via(config: &GateConfig, path: Path) -> Result<QuantumChannel> {
    let space = config.space()?;
    let schedule = config.schedule()?;
    let h = driven_hamiltonian(&space, &config.params, &schedule);
    channel_from_dynamics(&h, &config.decay, schedule.gate_time, &config.evolve, path)
}

/// Channel of an arbitrary generator over `[0, t_final]`.
pub fn channel_from_dynamics(
    hamiltonian: &TimeDependentHamiltonian,
    decay: &DecayParams,
    t_final: f64,
    opts: &EvolveOptions,
    path: Path,
) -> Result<QuantumChannel> {
    let space = hamiltonian.space().clone();
    let unitary = match path {
        Path::Auto => decay.is_zero(),
        Path::Unitary if !decay.is_zero() => {
            return Err(Error::config("path", "the ket path cannot represent dissipation"));
        }
        Path::Unitary => true,
        Path::Density => false,
    };
    let jumps = decay.jump_operators(&space);

    let seeds = (0..QUBIT_DIM)
        .map(|q| {
            let label = BasisLabel::from_qubit(q)?;
            space.index_of(&label).ok_or(Error::IndexOutOfRange {
                what: "qubit basis (not in space)",
                index: q,
                valid: "0..=7",
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let blocks: Vec<Block> = seeds
        .iter()
        .map(|&seed| {
            let indices = closure(hamiltonian, &jumps, &[seed]);
            let start = indices.binary_search(&seed).unwrap();
            Block {
                labels: indices.iter().map(|&i| space.label(i)).collect(),
                side: Side::new(hamiltonian, &jumps, &indices),
                start,
            }
        })
        .collect();

    let mut channel = if unitary {
        unitary_images(&blocks, t_final, opts)?
    } else {
        density_images(&blocks, t_final, opts)?
    };
    channel.gate_time = t_final;
    Ok(channel)
}

struct Block {
    labels: Vec<BasisLabel>,
    side: Side,
    start: usize,
}

fn unitary_images(blocks: &[Block], t_final: f64, opts: &EvolveOptions) -> Result<QuantumChannel> {
    let kets = blocks
        .par_iter()
        .map(|b| {
            let mut x0 = vec![C64::new(0.0, 0.0); b.labels.len()];
            x0[b.start] = C64::new(1.0, 0.0);
            evolve_ket_block(&b.side, x0, t_final, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut images = Vec::with_capacity(64);
    for m in 0..QUBIT_DIM {
        for n in 0..QUBIT_DIM {
            let (km, kn) = (&kets[m], &kets[n]);
            images.push(extract_block(&blocks[m].labels, &blocks[n].labels, |r, c| km[r] * kn[c].conj()));
        }
    }
    let drift = kets
        .iter()
        .map(|k| (k.iter().map(|v| v.norm_sqr()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut ch = QuantumChannel::from_images(images)?;
    ch.trace_drift = drift;
    Ok(ch)
}

fn density_images(blocks: &[Block], t_final: f64, opts: &EvolveOptions) -> Result<QuantumChannel> {
    let pairs: Vec<(usize, usize)> = (0..QUBIT_DIM).flat_map(|m| (m..QUBIT_DIM).map(move |n| (m, n))).collect();
    let evolved = pairs
        .par_iter()
        .map(|&(m, n)| {
            let (rows, cols) = (&blocks[m], &blocks[n]);
            let nc = cols.labels.len();
            let mut x0 = vec![C64::new(0.0, 0.0); rows.labels.len() * nc];
            x0[rows.start * nc + cols.start] = C64::new(1.0, 0.0);
            let x = evolve_density_block(&rows.side, &cols.side, x0, t_final, opts)?;
            let drift = if m == n {
                let tr: C64 = (0..nc).map(|i| x[i * nc + i]).sum();
                (tr - C64::new(1.0, 0.0)).norm()
            } else {
                0.0
            };
            let image = extract_block(&rows.labels, &cols.labels, |r, c| x[r * nc + c]);
            Ok((image, drift))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut images = vec![QubitMatrix::zeros(); 64];
    let mut drift = 0.0f64;
    for (&(m, n), (image, d)) in pairs.iter().zip(evolved) {
        drift = drift.max(d);
        images[n * QUBIT_DIM + m] = image.adjoint();
        images[m * QUBIT_DIM + n] = image;
    }
    let mut ch = QuantumChannel::from_images(images)?;
    ch.trace_drift = drift;
    Ok(ch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_channel_fidelity() {
        let f = average_gate_fidelity(&QuantumChannel::identity(), &QubitMatrix::identity()).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_against_fredkin() {
        // unitary channels: F̄ = (|tr U†V|² + d) / (d(d + 1)), here tr U = 6
        let f = average_gate_fidelity(&QuantumChannel::identity(), &fredkin_ideal()).unwrap();
        assert!((f - (36.0 + 8.0) / 72.0).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_fidelity() {
        for p in [0.0, 0.1, 0.5, 1.0] {
            let f = average_gate_fidelity(&QuantumChannel::depolarizing(p), &QubitMatrix::identity()).unwrap();
            // Haar average of ⟨ψ|((1-p)ψ + p I/8)|ψ⟩ = 1 − p + p/8
            assert!((f - (1.0 - p + p / 8.0)).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn ideal_gate_swaps_only_five_and_six() {
        let u = fredkin_ideal();
        assert_eq!(u * u, QubitMatrix::identity());
        for q in [0, 1, 2, 3, 4, 7] {
            assert_eq!(u[(q, q)], C64::new(1.0, 0.0));
        }
        assert_eq!(u[(6, 5)], C64::new(1.0, 0.0));
        assert_eq!(u[(5, 6)], C64::new(1.0, 0.0));
    }

    #[test]
    fn pauli_basis_is_orthogonal() {
        let b = pauli_tensor_basis();
        assert_eq!(b.len(), 64);
        for (i, p) in b.iter().enumerate() {
            for (j, q) in b.iter().enumerate() {
                let ip = (p.adjoint() * q).trace();
                let expect = if i == j { 8.0 } else { 0.0 };
                assert!((ip - C64::from(expect)).norm() < 1e-14);
            }
        }
        // the control is the most significant factor: index 16 is X ⊗ I ⊗ I
        assert_eq!(b[16][(4, 0)], C64::new(1.0, 0.0));
        assert_eq!(b[1][(1, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn process_relation_holds_for_unitaries() {
        let u = fredkin_ideal();
        let ch = QuantumChannel::from_unitary(&u);
        assert!((process_fidelity(&ch, &u) - 1.0).abs() < 1e-14);
        let f = average_gate_fidelity(&QuantumChannel::identity(), &u).unwrap();
        let alt = average_from_process(process_fidelity(&QuantumChannel::identity(), &u));
        assert!((f - alt).abs() < 1e-14);
    }

    #[test]
    fn dispersive_rejects_adiabatic_pulse() {
        let mut cfg = GateConfig::dispersive(0.02);
        cfg.pulse = PulseShape::Adiabatic;
        assert!(matches!(cfg.schedule(), Err(Error::Config { .. })));
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("Resonant".parse::<Scheme>().unwrap(), Scheme::Resonant);
        assert_eq!(" dispersive".parse::<Scheme>().unwrap(), Scheme::Dispersive);
        assert!("adiabatic".parse::<Scheme>().is_err());
    }

    #[test]
    fn choi_of_unitary_is_positive() {
        assert!(QuantumChannel::from_unitary(&fredkin_ideal()).choi_min_eigenvalue() > -1e-12);
        assert!(QuantumChannel::depolarizing(0.3).choi_min_eigenvalue() > -1e-12);
    }
}
