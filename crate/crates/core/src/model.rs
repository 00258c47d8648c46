//! Interaction-picture Hamiltonian of the three-cavity array and the
//! analytic structure behind both gate schemes.
//!
//! ```text
//! H_I = Σ_{j=1,3} Ω_j (|e_j⟩⟨1_j| + h.c.)
//!     + J Σ_{k=1,2} (a_k† a_{k+1} + h.c.)
//!     + g Σ_i (a_i |e_i⟩⟨0_i| + h.c.)
//!     + Δ Σ_i |e_i⟩⟨e_i|
//! ```
//!
//! The resonant scheme (Δ = 0) works through a dark state of the atom-cavity
//! part; the dispersive scheme (Δ = J = g) through virtual excitation of six
//! dressed states.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{atom_transition, cavity_lowering, BasisLabel, HilbertSpace, Level, SparseOperator};
use crate::propagate::{Coefficient, TimeDependentHamiltonian};
use crate::pulses::DriveSchedule;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Atom-cavity coupling, identical for the three atoms.
    pub g: f64,
    /// Photon hopping between neighbouring cavities.
    pub j: f64,
    /// One-photon detuning of |e⟩.
    pub delta: f64,
}

impl PhysParams {
    pub fn new(g: f64, j: f64, delta: f64) -> Result<Self> {
        let p = Self { g, j, delta };
        p.validate()?;
        Ok(p)
    }

    /// `Δ = 0`, `J = g = 1`.
    pub fn resonant() -> Self {
        Self { g: 1.0, j: 1.0, delta: 0.0 }
    }

    /// `Δ = J = g = 1`.
    pub fn dispersive() -> Self {
        Self { g: 1.0, j: 1.0, delta: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name, value: f64, ok: bool, reason| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value, reason })
            }
        };
        check("g", self.g, self.g > 0.0, "must be positive")?;
        check("J", self.j, self.j >= 0.0, "must be non-negative")?;
        check("Delta", self.delta, self.delta >= 0.0, "must be non-negative")
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn sigma(space: &Arc<HilbertSpace>, i: usize, from: Level, to: Level) -> SparseOperator {
    atom_transition(space, i, from, to).expect("atom index is 1..=3")
}

fn lowering(space: &Arc<HilbertSpace>, k: usize) -> SparseOperator {
    cavity_lowering(space, k).expect("cavity index is 1..=3")
}

/// `Ω1 (|e_1⟩⟨1_1| + h.c.) + Ω3 (|e_3⟩⟨1_3| + h.c.)`
pub fn drive_term(space: &Arc<HilbertSpace>, omega1: f64, omega3: f64) -> SparseOperator {
    let mut h = SparseOperator::zero(space);
    for (i, om) in [(1, omega1), (3, omega3)] {
        let up = sigma(space, i, Level::One, Level::Excited);
        h = h.plus(&up.plus(&up.adjoint()).scaled(om));
    }
    h
}

/// `J Σ_k (a_k† a_{k+1} + h.c.)`
pub fn hopping_term(space: &Arc<HilbertSpace>, j: f64) -> SparseOperator {
    let mut h = SparseOperator::zero(space);
    for k in 1..=2 {
        let hop = lowering(space, k).adjoint().compose(&lowering(space, k + 1));
        h = h.plus(&hop.plus(&hop.adjoint()).scaled(j));
    }
    h
}

/// `g Σ_i (a_i |e_i⟩⟨0_i| + h.c.)`
pub fn atom_cavity_term(space: &Arc<HilbertSpace>, g: f64) -> SparseOperator {
    let mut h = SparseOperator::zero(space);
    for i in 1..=3 {
        // lower the photon first so the intermediate never leaves a sector
        let absorb = sigma(space, i, Level::Zero, Level::Excited).compose(&lowering(space, i));
        h = h.plus(&absorb.plus(&absorb.adjoint()).scaled(g));
    }
    h
}

/// `Δ Σ_i |e_i⟩⟨e_i|`
pub fn detuning_term(space: &Arc<HilbertSpace>, delta: f64) -> SparseOperator {
    let mut h = SparseOperator::zero(space);
    for i in 1..=3 {
        h = h.plus(&sigma(space, i, Level::Excited, Level::Excited).scaled(delta));
    }
    h
}

pub fn full_hamiltonian(space: &Arc<HilbertSpace>, params: &PhysParams, omega1: f64, omega3: f64) -> SparseOperator {
    let split = zeno_split(space, params, omega1, omega3);
    split.h1.plus(&split.h2).plus(&split.detuning)
}

/// The time-dependent `H_I(t)` for a drive schedule: a static part plus the
/// drive pattern `(σ¹ - σ³)` weighted by the envelope `A(t)`.
pub fn driven_hamiltonian(
    space: &Arc<HilbertSpace>,
    params: &PhysParams,
    schedule: &DriveSchedule,
) -> TimeDependentHamiltonian {
    let split = zeno_split(space, params, 0.0, 0.0);
    let static_part = split.h2.plus(&split.detuning);
    let pattern = drive_term(space, 1.0, -1.0);
    let coefficient = if schedule.is_constant() {
        Coefficient::Static(schedule.peak)
    } else {
        let s = *schedule;
        Coefficient::dynamic(move |t| s.amplitude(t))
    };
    TimeDependentHamiltonian::new(static_part).with_term(pattern, coefficient)
}

#[derive(Clone, Debug)]
pub struct ZenoSplit {
    /// Drive terms only.
    pub h1: SparseOperator,
    /// Hopping plus atom-cavity exchange, the "measuring" interaction.
    pub h2: SparseOperator,
    pub detuning: SparseOperator,
}

pub fn zeno_split(space: &Arc<HilbertSpace>, params: &PhysParams, omega1: f64, omega3: f64) -> ZenoSplit {
    ZenoSplit {
        h1: drive_term(space, omega1, omega3),
        h2: hopping_term(space, params.j).plus(&atom_cavity_term(space, params.g)),
        detuning: detuning_term(space, params.delta),
    }
}

/// Eigenprojection decomposition of the strong part `H2` together with the
/// weak part `H1` it confines.
#[derive(Clone, Debug)]
pub struct ZenoHamiltonian {
    /// Cluster eigenvalues `η_n`, ascending.
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<DMatrix<C64>>,
    h1: DMatrix<C64>,
    tolerance: f64,
}

impl ZenoHamiltonian {
    /// `Σ_n η_n P_n + P_n H1 P_n`
    pub fn hamiltonian(&self) -> DMatrix<C64> {
        let d = self.h1.nrows();
        let mut out = DMatrix::zeros(d, d);
        for (eta, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += p * re(*eta) + p * &self.h1 * p;
        }
        out
    }

    /// `P_0 H1 P_0` on the zero-eigenvalue (dark) projection; zero if `H2`
    /// has no null space.
    pub fn dark_restriction(&self) -> DMatrix<C64> {
        match self.dark_projector() {
            Some(p) => p * &self.h1 * p,
            None => DMatrix::zeros(self.h1.nrows(), self.h1.ncols()),
        }
    }

    pub fn dark_projector(&self) -> Option<&DMatrix<C64>> {
        self.eigenvalues
            .iter()
            .position(|eta| eta.abs() < self.tolerance)
            .map(|n| &self.projectors[n])
    }
}

/// Numerically eigendecomposes `h2`, groups its eigenvalues into clusters no
/// wider than `1e-8 · g`, and forms the projectors.
pub fn zeno_hamiltonian(h1: &DMatrix<C64>, h2: &DMatrix<C64>, g: f64) -> Result<ZenoHamiltonian> {
    let tolerance = 1e-8 * g;
    let eig = h2.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let value = eig.eigenvalues[i];
        if let Some(last) = clusters.last_mut() {
            let gap = value - eig.eigenvalues[*last.last().unwrap()];
            if gap < tolerance {
                last.push(i);
                continue;
            }
            if gap < 10.0 * tolerance {
                return Err(Error::AmbiguousClusters { gap, tolerance });
            }
        }
        clusters.push(vec![i]);
    }

    let d = h2.nrows();
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    for members in clusters {
        let mean = members.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / members.len() as f64;
        let mut p = DMatrix::zeros(d, d);
        for &i in &members {
            let v = eig.eigenvectors.column(i);
            p += &v * v.adjoint();
        }
        eigenvalues.push(if mean.abs() < tolerance { 0.0 } else { mean });
        projectors.push(p);
    }
    Ok(ZenoHamiltonian {
        eigenvalues,
        projectors,
        h1: h1.clone(),
        tolerance,
    })
}

/// The closed subspace of the controlled swap, in matrix order.
pub fn resonant_basis() -> [BasisLabel; 7] {
    [
        BasisLabel::ket("011", "000"),
        BasisLabel::ket("01e", "000"),
        BasisLabel::ket("010", "001"),
        BasisLabel::ket("010", "010"),
        BasisLabel::ket("010", "100"),
        BasisLabel::ket("e10", "000"),
        BasisLabel::ket("110", "000"),
    ]
}

/// `H_I` on the seven-state swap subspace. Any detuning shows up on the two
/// excited-atom diagonals (zero for the resonant scheme).
pub fn resonant_block(params: &PhysParams, omega1: f64, omega3: f64) -> DMatrix<f64> {
    let (g, j, d) = (params.g, params.j, params.delta);
    let mut m = DMatrix::zeros(7, 7);
    let couplings = [omega3, g, j, j, g, omega1];
    for (k, c) in couplings.into_iter().enumerate() {
        m[(k, k + 1)] = c;
        m[(k + 1, k)] = c;
    }
    m[(1, 1)] = d;
    m[(5, 5)] = d;
    m
}

/// Eigenpairs in a named basis.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: DMatrix<f64>,
    pub basis_labels: Vec<String>,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    /// Largest `‖M v − λ v‖` over all pairs.
    pub fn max_residual(&self, m: &DMatrix<f64>) -> f64 {
        (0..self.values.len())
            .map(|k| {
                let v = self.vector(k);
                (m * &v - &v * self.values[k]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        (gram - DMatrix::identity(self.values.len(), self.values.len())).amax()
    }
}

/// Drive-free 5×5 interior of [`resonant_block`], ordered
/// `|01e⟩|000⟩, |010⟩|001⟩, |010⟩|010⟩, |010⟩|100⟩, |e10⟩|000⟩`.
pub fn resonant_interior(params: &PhysParams) -> DMatrix<f64> {
    let full = resonant_block(&PhysParams { delta: 0.0, ..*params }, 0.0, 0.0);
    full.view((1, 1), (5, 5)).into_owned()
}

/// Closed-form eigensystem of the interior at `J = g`: eigenvalues
/// `0, -g, g, -√3g, √3g`, the first being the dark state
/// `|D⟩ = (|e10⟩|000⟩ + |01e⟩|000⟩ − |010⟩|010⟩)/√3`.
pub fn resonant_eigensystem(params: &PhysParams) -> Result<EigenSystem> {
    if !close(params.j, params.g) {
        return Err(Error::ResonantNeedsJEqualG {
            j: params.j,
            g: params.g,
        });
    }
    let g = params.g;
    let (h, r3, r12) = (0.5, 1.0 / SQRT_3, 1.0 / 12f64.sqrt());
    let columns: [[f64; 5]; 5] = [
        [r3, 0.0, -r3, 0.0, r3],
        [-h, h, 0.0, -h, h],
        [-h, -h, 0.0, h, h],
        [-r12, h, -r3, h, -r12],
        [r12, h, r3, h, r12],
    ];
    let vectors = DMatrix::from_fn(5, 5, |r, c| columns[c][r]);
    Ok(EigenSystem {
        values: vec![0.0, -g, g, -SQRT_3 * g, SQRT_3 * g],
        vectors,
        basis_labels: resonant_basis()[1..6].iter().map(|l| l.to_string()).collect(),
    })
}

/// Amplitudes of `|D⟩` on a space.
pub fn dark_state(space: &HilbertSpace) -> DVector<C64> {
    let mut v = DVector::zeros(space.dim());
    for (label, amp) in [("e10", 1.0), ("01e", 1.0)] {
        v[space.index_of(&BasisLabel::ket(label, "000")).unwrap()] = re(amp / SQRT_3);
    }
    v[space.index_of(&BasisLabel::ket("010", "010")).unwrap()] = re(-1.0 / SQRT_3);
    v
}

/// The effective three-level resonant model on
/// `|110⟩|000⟩, |011⟩|000⟩, |D⟩`.
#[derive(Clone, Debug)]
pub struct EffectiveResonant {
    pub matrix: Matrix3<f64>,
    /// Set when a drive exceeds `0.2 g`, where the Zeno picture degrades.
    pub outside_zeno_regime: bool,
}

pub fn effective_resonant(omega1: f64, omega3: f64, g: f64) -> EffectiveResonant {
    let mut m = Matrix3::zeros();
    m[(0, 2)] = omega1 / SQRT_3;
    m[(2, 0)] = omega1 / SQRT_3;
    m[(1, 2)] = omega3 / SQRT_3;
    m[(2, 1)] = omega3 / SQRT_3;
    EffectiveResonant {
        matrix: m,
        outside_zeno_regime: omega1.abs().max(omega3.abs()) > 0.2 * g,
    }
}

/// Names of the collective basis, in block order.
pub const COLLECTIVE_LABELS: [&str; 6] = ["phi_1", "phi_a", "phi_2", "phi_b", "phi_3", "phi_c"];

/// The collective single-excitation states `φ1, φa, φ2, φb, φ3, φc` as
/// columns over `space`.
pub fn collective_basis(space: &HilbertSpace) -> DMatrix<C64> {
    let atom = |s: &str| space.index_of(&BasisLabel::ket(s, "000")).unwrap();
    let cav = |s: &str| space.index_of(&BasisLabel::ket("000", s)).unwrap();
    let (e1, e2, e3) = (atom("e00"), atom("0e0"), atom("00e"));
    let (c1, c2, c3) = (cav("100"), cav("010"), cav("001"));
    let h = 0.5;
    let r = 1.0 / SQRT_2;
    let cols: [Vec<(usize, f64)>; 6] = [
        vec![(e1, h), (e2, -h * SQRT_2), (e3, h)],
        vec![(c1, h), (c2, -h * SQRT_2), (c3, h)],
        vec![(e1, h), (e2, h * SQRT_2), (e3, h)],
        vec![(c1, h), (c2, h * SQRT_2), (c3, h)],
        vec![(e1, r), (e3, -r)],
        vec![(c1, r), (c3, -r)],
    ];
    let mut m = DMatrix::zeros(space.dim(), 6);
    for (k, col) in cols.iter().enumerate() {
        for &(i, a) in col {
            m[(i, k)] = re(a);
        }
    }
    m
}

/// Drive-free single-excitation Hamiltonian in the collective basis: three
/// 2×2 blocks `[[Δ, g], [g, −√2J]]`, `[[Δ, g], [g, √2J]]`, `[[Δ, g], [g, 0]]`.
pub fn dispersive_block(g: f64, j: f64, delta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(6, 6);
    for (b, cavity_energy) in [-SQRT_2 * j, SQRT_2 * j, 0.0].into_iter().enumerate() {
        let k = 2 * b;
        m[(k, k)] = delta;
        m[(k, k + 1)] = g;
        m[(k + 1, k)] = g;
        m[(k + 1, k + 1)] = cavity_energy;
    }
    m
}

/// The mixing coefficients `(α, β)` of the dressed states.
pub fn dispersive_coefficients(g: f64, j: f64, delta: f64) -> (f64, f64) {
    let s_minus = (4.0 * g * g + (delta + SQRT_2 * j).powi(2)).sqrt();
    let s_plus = (4.0 * g * g + (delta - SQRT_2 * j).powi(2)).sqrt();
    (delta + SQRT_2 * j - s_minus, delta - SQRT_2 * j - s_plus)
}

/// Closed-form eigensystem of [`dispersive_block`], in the collective basis.
pub fn dispersive_eigensystem(g: f64, j: f64, delta: f64) -> EigenSystem {
    let r1 = (4.0 * g * g + delta * delta + 2.0 * SQRT_2 * delta * j + 2.0 * j * j).sqrt();
    let r2 = (4.0 * g * g + delta * delta - 2.0 * SQRT_2 * delta * j + 2.0 * j * j).sqrt();
    let r3 = (4.0 * g * g + delta * delta).sqrt();
    let values = vec![
        0.5 * (delta - SQRT_2 * j - r1),
        0.5 * (delta - SQRT_2 * j + r1),
        0.5 * (delta + SQRT_2 * j - r2),
        0.5 * (delta + SQRT_2 * j + r2),
        0.5 * (delta - r3),
        0.5 * (delta + r3),
    ];
    let (alpha, beta) = dispersive_coefficients(g, j, delta);
    let na = (4.0 * g * g + alpha * alpha).sqrt();
    let nb = (4.0 * g * g + beta * beta).sqrt();
    let lo = ((r3 - delta) / (2.0 * r3)).sqrt();
    let hi = ((r3 + delta) / (2.0 * r3)).sqrt();

    let mut v = DMatrix::zeros(6, 6);
    v[(0, 0)] = alpha / na;
    v[(1, 0)] = 2.0 * g / na;
    v[(0, 1)] = 2.0 * g / na;
    v[(1, 1)] = -alpha / na;
    v[(2, 2)] = beta / nb;
    v[(3, 2)] = 2.0 * g / nb;
    v[(2, 3)] = 2.0 * g / nb;
    v[(3, 3)] = -beta / nb;
    v[(4, 4)] = -lo;
    v[(5, 4)] = hi;
    v[(4, 5)] = hi;
    v[(5, 5)] = lo;
    EigenSystem {
        values,
        vectors: v,
        basis_labels: COLLECTIVE_LABELS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Effective dipole-dipole couplings of the dispersive scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleCouplings {
    /// On `|100⟩, |001⟩` (cavities in vacuum).
    pub single: Matrix2<f64>,
    /// On `|110⟩, |011⟩`.
    pub double: Matrix2<f64>,
}

/// The closed-form dipole-dipole Hamiltonians at `Δ = J = g`:
///
/// ```text
/// H¹ = (Ω1²|100⟩⟨100| + Ω3²|001⟩⟨001| + Ω1Ω3(|100⟩⟨001| + h.c.)) / g
/// H² = −(Ω1²|110⟩⟨110| + Ω3²|011⟩⟨011| + Ω1Ω3(|110⟩⟨011| + h.c.)) / 2g
/// ```
///
/// Second-order perturbation theory ([`perturbative_couplings`]) gives `H²`
/// exactly and `H¹` with the opposite overall sign. Populations and the gate
/// (phases of ±π and 2π at `T = gπ/Ω²`) do not depend on that sign.
pub fn effective_dispersive(omega1: f64, omega3: f64, params: &PhysParams) -> Result<DipoleCouplings> {
    let (g, j, delta) = (params.g, params.j, params.delta);
    if !(close(delta, j) && close(j, g)) {
        return Err(Error::DispersiveNeedsDeltaJG { delta, j, g });
    }
    let single = Matrix2::new(omega1 * omega1, omega1 * omega3, omega1 * omega3, omega3 * omega3) / g;
    let double = -Matrix2::new(omega1 * omega1, omega1 * omega3, omega1 * omega3, omega3 * omega3) / (2.0 * g);
    Ok(DipoleCouplings { single, double })
}

/// Second-order couplings `H_fs = −Σ_i ⟨f|V|E_i⟩⟨E_i|V|s⟩ / E_i` summed over
/// the dressed eigenstates `|E_i⟩` of the drive-free Hamiltonian, valid for
/// any `g, J, Δ` with no zero eigenvalue among the intermediates.
///
/// For `|100⟩, |001⟩` the intermediates are the six dressed states of
/// [`dispersive_eigensystem`]; for `|110⟩, |011⟩` they are the five interior
/// states of the swap subspace, including the detuning.
pub fn perturbative_couplings(omega1: f64, omega3: f64, params: &PhysParams) -> DipoleCouplings {
    let (g, j, delta) = (params.g, params.j, params.delta);

    // |e00⟩ and |00e⟩ in the collective basis
    let h = 0.5;
    let r = 1.0 / SQRT_2;
    let e_left = DVector::from_vec(vec![h, 0.0, h, 0.0, r, 0.0]) * omega1;
    let e_right = DVector::from_vec(vec![h, 0.0, h, 0.0, -r, 0.0]) * omega3;
    let es = dispersive_eigensystem(g, j, delta);
    let single = second_order(&es, &[e_left, e_right]);

    // interior of the swap subspace; |e10⟩ is last, |01e⟩ first
    let interior = resonant_block(params, 0.0, 0.0).view((1, 1), (5, 5)).into_owned();
    let eig = interior.clone().symmetric_eigen();
    let inner = EigenSystem {
        values: eig.eigenvalues.iter().copied().collect(),
        vectors: eig.eigenvectors,
        basis_labels: Vec::new(),
    };
    let mut to_110 = DVector::zeros(5);
    to_110[4] = omega1;
    let mut to_011 = DVector::zeros(5);
    to_011[0] = omega3;
    let double = second_order(&inner, &[to_110, to_011]);
    DipoleCouplings { single, double }
}

fn second_order(es: &EigenSystem, couplings: &[DVector<f64>; 2]) -> Matrix2<f64> {
    let mut out = Matrix2::zeros();
    for (k, &e) in es.values.iter().enumerate() {
        let v = es.vector(k);
        let amps = [v.dot(&couplings[0]), v.dot(&couplings[1])];
        for f in 0..2 {
            for s in 0..2 {
                out[(f, s)] -= amps[f] * amps[s] / e;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_space;

    fn sector() -> Arc<HilbertSpace> {
        build_space(2, Some(2)).unwrap()
    }

    #[test]
    fn sector_terms_are_restrictions_of_full_terms() {
        let sec = sector();
        let full = build_space(2, None).unwrap();
        let p = PhysParams::new(1.0, 0.7, 0.3).unwrap();
        let pairs = [
            (full_hamiltonian(&sec, &p, 0.2, -0.1), full_hamiltonian(&full, &p, 0.2, -0.1)),
            (atom_cavity_term(&sec, 1.0), atom_cavity_term(&full, 1.0)),
        ];
        for (small, big) in &pairs {
            for (r, c, v) in small.matrix().triplets() {
                let (lr, lc) = (sec.label(r), sec.label(c));
                assert_eq!(big.element(&lr, &lc).unwrap(), v);
            }
            let mut kept = 0;
            for (r, c, _) in big.matrix().triplets() {
                if sec.index_of(&full.label(r)).is_some() && sec.index_of(&full.label(c)).is_some() {
                    kept += 1;
                }
            }
            assert_eq!(kept, small.matrix().nnz());
        }
    }

    fn restrict(op: &SparseOperator, labels: &[BasisLabel]) -> DMatrix<f64> {
        let s = op.space();
        DMatrix::from_fn(labels.len(), labels.len(), |r, c| {
            let v = op.to_dense()[(s.index_of(&labels[r]).unwrap(), s.index_of(&labels[c]).unwrap())];
            assert!(v.im.abs() < 1e-15);
            v.re
        })
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let s = sector();
        for p in [PhysParams::resonant(), PhysParams::dispersive(), PhysParams::new(0.7, 1.3, 0.4).unwrap()] {
            assert!(full_hamiltonian(&s, &p, 0.05, -0.03).hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_annihilates_dark_state() {
        let s = sector();
        let h = full_hamiltonian(&s, &PhysParams::resonant(), 0.0, 0.0);
        let d = dark_state(&s);
        assert!(h.apply(&d).norm() < 1e-14);
    }

    #[test]
    fn zero_couplings_give_zero_operator() {
        let s = sector();
        let p = PhysParams { g: 1.0, j: 0.0, delta: 0.0 };
        let h = zeno_split(&s, &p, 0.0, 0.0);
        assert_eq!(h.h1.matrix().nnz(), 0);
        assert_eq!(h.detuning.matrix().nnz(), 0);
        let h = full_hamiltonian(&s, &PhysParams { g: 0.0, j: 0.0, delta: 0.0 }, 0.0, 0.0);
        assert_eq!(h.matrix().nnz(), 0);
    }

    #[test]
    fn drive_matrix_element() {
        let s = sector();
        let h = full_hamiltonian(&s, &PhysParams::resonant(), 0.05, -0.07);
        let v = h.element(&BasisLabel::ket("011", "000"), &BasisLabel::ket("01e", "000")).unwrap();
        assert_eq!(v, re(-0.07));
    }

    #[test]
    fn excitation_counter_commutes_with_hamiltonian() {
        let s = sector();
        let c = crate::hilbert::excitation_counter(&s);
        let h = full_hamiltonian(&s, &PhysParams::new(1.0, 0.8, 0.3).unwrap(), 0.1, -0.2);
        assert!(c.commutator(&h).max_abs() < 1e-12);
        let s = build_space(2, None).unwrap();
        let c = crate::hilbert::excitation_counter(&s);
        let h = full_hamiltonian(&s, &PhysParams::dispersive(), 0.1, -0.2);
        assert!(c.commutator(&h).max_abs() < 1e-12);
    }

    #[test]
    fn zeno_split_reassembles() {
        let s = sector();
        let p = PhysParams::new(1.0, 0.9, 0.5).unwrap();
        let split = zeno_split(&s, &p, 0.04, -0.04);
        let sum = split.h1.plus(&split.h2).plus(&split.detuning);
        let h = full_hamiltonian(&s, &p, 0.04, -0.04);
        assert!(sum.plus(&h.scaled(-1.0)).max_abs() < 1e-15);
        assert_eq!(zeno_split(&s, &p, 0.0, 0.0).h1.matrix().nnz(), 0);
        let h2 = &split.h2;
        let v = h2.element(&BasisLabel::ket("010", "001"), &BasisLabel::ket("010", "010")).unwrap();
        assert_eq!(v, re(0.9));
        let d = dark_state(&s);
        let split = zeno_split(&s, &PhysParams::resonant(), 0.0, 0.0);
        assert!(split.h2.apply(&d).norm() < 1e-14);
    }

    #[test]
    fn resonant_block_matches_projection() {
        let s = sector();
        for p in [PhysParams::resonant(), PhysParams::new(1.0, 0.6, 0.0).unwrap()] {
            let h = full_hamiltonian(&s, &p, 0.05, -0.05);
            let projected = restrict(&h, &resonant_basis());
            assert_eq!(projected, resonant_block(&p, 0.05, -0.05));
        }
        let m = resonant_block(&PhysParams::resonant(), 0.3, 0.2);
        assert_eq!(m[(0, 1)], 0.2);
        assert_eq!(m[(5, 6)], 0.3);
        assert!((0..7).all(|k| m[(k, k)] == 0.0));
    }

    #[test]
    fn resonant_eigensystem_closed_forms() {
        let p = PhysParams::resonant();
        let es = resonant_eigensystem(&p).unwrap();
        let m = resonant_interior(&p);
        assert!(es.max_residual(&m) < 1e-12);
        assert!(es.orthonormality_defect() < 1e-12);
        let mut numeric: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        numeric.sort_by(f64::total_cmp);
        let mut closed = es.values.clone();
        closed.sort_by(f64::total_cmp);
        for (a, b) in numeric.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-12);
        }
        // dark state overlap
        let d = DVector::from_vec(vec![1.0, 0.0, -1.0, 0.0, 1.0]) / SQRT_3;
        assert!((es.vector(0).dot(&d).abs() - 1.0).abs() < 1e-14);
        assert!(resonant_eigensystem(&PhysParams::new(1.0, 0.5, 0.0).unwrap()).is_err());
    }

    #[test]
    fn zeno_projection_on_swap_subspace() {
        let p = PhysParams::resonant();
        let (om1, om3) = (0.04, -0.03);
        let full = resonant_block(&p, om1, om3);
        let h2 = resonant_block(&p, 0.0, 0.0);
        let h1 = &full - &h2;
        let z = zeno_hamiltonian(&h1.map(re), &h2.map(re), p.g).unwrap();
        let total: DMatrix<C64> = z.projectors.iter().sum();
        assert!((total - DMatrix::identity(7, 7)).camax() < 1e-10);
        let dark = z.dark_restriction();
        // |D⟩ in the 7-state basis
        let d = DVector::from_vec(vec![0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0]).map(|x| re(x / SQRT_3));
        let mut s110 = DVector::zeros(7);
        s110[6] = re(1.0);
        let mut s011 = DVector::zeros(7);
        s011[0] = re(1.0);
        let c1 = (d.adjoint() * &dark * &s110)[(0, 0)];
        let c3 = (d.adjoint() * &dark * &s011)[(0, 0)];
        assert!((c1 - re(om1 / SQRT_3)).norm() < 1e-10);
        assert!((c3 - re(om3 / SQRT_3)).norm() < 1e-10);

        let z0 = zeno_hamiltonian(&DMatrix::zeros(7, 7), &h2.map(re), p.g).unwrap();
        let expect: DMatrix<C64> = z0
            .eigenvalues
            .iter()
            .zip(&z0.projectors)
            .map(|(e, p)| p * re(*e))
            .sum();
        assert!((z0.hamiltonian() - expect).camax() < 1e-14);
        assert!((z0.hamiltonian() - h2.map(re)).camax() < 1e-10);
    }

    #[test]
    fn ambiguous_clusters_are_rejected() {
        let h2 = DMatrix::from_diagonal(&DVector::from_vec(vec![re(0.0), re(3e-8), re(1.0)]));
        assert!(matches!(
            zeno_hamiltonian(&DMatrix::zeros(3, 3), &h2, 1.0),
            Err(Error::AmbiguousClusters { .. })
        ));
    }

    #[test]
    fn effective_resonant_structure() {
        let om = 0.05;
        let eff = effective_resonant(om, -om, 1.0);
        let m = eff.matrix;
        let bright = nalgebra::Vector3::new(1.0, -1.0, 0.0) / SQRT_2;
        let dark = nalgebra::Vector3::new(1.0, 1.0, 0.0) / SQRT_2;
        let d = nalgebra::Vector3::new(0.0, 0.0, 1.0);
        assert!((d.dot(&(m * bright)) - SQRT_2 * om / SQRT_3).abs() < 1e-15);
        assert!((m * dark).norm() < 1e-15);
        assert_eq!(effective_resonant(0.0, 0.0, 1.0).matrix, Matrix3::zeros());
        assert!(effective_resonant(0.3, -0.3, 1.0).outside_zeno_regime);
        assert!(!eff.outside_zeno_regime);
    }

    #[test]
    fn dispersive_block_matches_basis_rotation() {
        let s = sector();
        for p in [PhysParams::dispersive(), PhysParams::new(1.0, 0.7, 0.3).unwrap()] {
            let h = full_hamiltonian(&s, &p, 0.0, 0.0).to_dense();
            let v = collective_basis(&s);
            let rotated = v.adjoint() * h * &v;
            let expect = dispersive_block(p.g, p.j, p.delta).map(re);
            assert!((rotated - expect).camax() < 1e-14);
        }
        let m = dispersive_block(1.0, 1.0, 1.0);
        assert!((m[(1, 1)] + SQRT_2).abs() < 1e-15);
        let d = dispersive_block(0.0, 0.5, 0.2);
        let diag: Vec<f64> = (0..6).map(|k| d[(k, k)]).collect();
        assert_eq!(diag, vec![0.2, -SQRT_2 * 0.5, 0.2, SQRT_2 * 0.5, 0.2, 0.0]);
        assert!(d.iter().enumerate().all(|(k, &x)| k % 7 == 0 || x == 0.0));
    }

    #[test]
    fn dispersive_closed_forms() {
        let es = dispersive_eigensystem(1.0, 1.0, 1.0);
        assert!((es.values[4] - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((es.values[4] + 0.6180).abs() < 1e-4);
        assert!((es.values[5] - 1.6180).abs() < 1e-4);
        assert!((es.values[0] + 1.7746).abs() < 1e-4);
        for (g, j, d) in [(1.0, 1.0, 1.0), (1.0, 0.3, 2.0), (0.5, 1.2, 0.0), (1.0, 0.0, 0.0)] {
            let es = dispersive_eigensystem(g, j, d);
            let m = dispersive_block(g, j, d);
            assert!(es.max_residual(&m) < 1e-10 * g);
            assert!(es.orthonormality_defect() < 1e-10);
        }
        let es = dispersive_eigensystem(1.0, 0.0, 0.0);
        let mut v = es.values.clone();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![-1.0, -1.0, -1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn dipole_dipole_closed_forms() {
        let om = 0.02;
        let c = effective_dispersive(om, -om, &PhysParams::dispersive()).unwrap();
        assert!((c.single[(0, 0)] - om * om).abs() < 1e-18);
        assert!((c.single[(0, 1)] + om * om).abs() < 1e-18);
        assert!((c.double[(1, 1)] + om * om / 2.0).abs() < 1e-18);
        assert!(effective_dispersive(om, -om, &PhysParams::resonant()).is_err());
    }

    #[test]
    fn perturbative_sum_reproduces_dipole_forms() {
        let p = PhysParams::dispersive();
        for (o1, o3) in [(0.02, -0.02), (0.01, 0.03)] {
            let pert = perturbative_couplings(o1, o3, &p);
            let closed = effective_dispersive(o1, o3, &p).unwrap();
            assert!((pert.double - closed.double).camax() < 1e-15);
            assert!((pert.single + closed.single).camax() < 1e-15);
        }
    }
}
