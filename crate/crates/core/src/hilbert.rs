//! Composite basis of three three-level atoms and three cavity modes, and the
//! elementary operators every Hamiltonian and jump operator is built from.
//!
//! Tensor ordering is atom1 ⊗ atom2 ⊗ atom3 ⊗ cav1 ⊗ cav2 ⊗ cav3, enumerated
//! lexicographically with cav3 running fastest. A space may be restricted to
//! the states whose excitation count `C` does not exceed a cap, where
//!
//! ```text
//! C = n1 + n2 + n3 + [a1 ∈ {1,e}] + [a3 ∈ {1,e}] + [a2 = e]
//! ```
//!
//! `C` commutes with the full interaction Hamiltonian (including the drives on
//! the outer atoms), and every jump operator of the master equation is
//! non-increasing in it, so the restriction is exact for qubit inputs.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SMatrix};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub type StateVector = DVector<C64>;
pub type DensityMatrix = DMatrix<C64>;
/// Operator on the three-qubit register, indexed control-first.
pub type QubitMatrix = SMatrix<C64, 8, 8>;

pub const NUM_ATOMS: usize = 3;
pub const NUM_CAVITIES: usize = 3;
pub const QUBIT_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Zero = 0,
    One = 1,
    Excited = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Zero, Level::One, Level::Excited];

    fn symbol(self) -> char {
        match self {
            Level::Zero => '0',
            Level::One => '1',
            Level::Excited => 'e',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            '0' => Some(Level::Zero),
            '1' => Some(Level::One),
            'e' | 'E' | '2' => Some(Level::Excited),
            _ => None,
        }
    }
}

/// A composite basis label `|a1 a2 a3⟩_a |n1 n2 n3⟩_c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub atoms: [Level; NUM_ATOMS],
    pub photons: [usize; NUM_CAVITIES],
}

impl BasisLabel {
    pub fn new(atoms: [Level; NUM_ATOMS], photons: [usize; NUM_CAVITIES]) -> Self {
        Self { atoms, photons }
    }

    /// Shorthand for tests and examples: `BasisLabel::ket("e10", "000")`.
    ///
    /// Panics on malformed input; use [`str::parse`] for fallible parsing.
    pub fn ket(atoms: &str, photons: &str) -> Self {
        format!("{atoms},{photons}")
            .parse()
            .unwrap_or_else(|e| panic!("bad basis label {atoms},{photons}: {e}"))
    }

    /// The conserved excitation count `C`.
    pub fn excitation(&self) -> usize {
        let outer = |l: Level| usize::from(l != Level::Zero);
        self.photons.iter().sum::<usize>()
            + outer(self.atoms[0])
            + outer(self.atoms[2])
            + usize::from(self.atoms[1] == Level::Excited)
    }

    /// Control-first qubit index `4 q2 + 2 q1 + q3` when every atom sits in a
    /// qubit level, ignoring the cavities.
    pub fn qubit_index(&self) -> Option<usize> {
        let bit = |l: Level| match l {
            Level::Zero => Some(0),
            Level::One => Some(1),
            Level::Excited => None,
        };
        Some(4 * bit(self.atoms[1])? + 2 * bit(self.atoms[0])? + bit(self.atoms[2])?)
    }

    /// Atoms encoding qubit index `q`, cavities in vacuum.
    pub fn from_qubit(q: usize) -> Result<Self> {
        if q >= QUBIT_DIM {
            return Err(Error::IndexOutOfRange {
                what: "qubit basis",
                index: q,
                valid: "0..=7",
            });
        }
        let lvl = |b: usize| if b == 1 { Level::One } else { Level::Zero };
        Ok(Self::new([lvl((q >> 1) & 1), lvl((q >> 2) & 1), lvl(q & 1)], [0; 3]))
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for a in self.atoms {
            write!(f, "{}", a.symbol())?;
        }
        write!(f, "⟩|")?;
        for n in self.photons {
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl FromStr for BasisLabel {
    type Err = Error;

    /// Accepts `e10,000` (atoms, photons) or just `e10` (vacuum cavities).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("label", format!("cannot parse basis label `{s}`"));
        let (a, n) = s.split_once(',').unwrap_or((s, "000"));
        let atoms: Vec<Level> = a.trim().chars().map(Level::from_symbol).collect::<Option<_>>().ok_or_else(bad)?;
        let photons: Vec<usize> = n
            .trim()
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if atoms.len() != NUM_ATOMS || photons.len() != NUM_CAVITIES {
            return Err(bad());
        }
        Ok(Self::new(
            [atoms[0], atoms[1], atoms[2]],
            [photons[0], photons[1], photons[2]],
        ))
    }
}

#[derive(Debug, Clone)]
pub struct HilbertSpace {
    fock_cap: usize,
    sector_cap: Option<usize>,
    basis: Vec<BasisLabel>,
    index_of: HashMap<BasisLabel, usize>,
}

/// Enumerates the composite basis, optionally keeping only labels with
/// excitation count `C <= sector_cap`.
pub fn build_space(fock_cap: usize, sector_cap: Option<usize>) -> Result<Arc<HilbertSpace>> {
    if fock_cap == 0 {
        return Err(Error::ZeroFockCap);
    }
    let mut basis = Vec::new();
    for a1 in Level::ALL {
        for a2 in Level::ALL {
            for a3 in Level::ALL {
                for n1 in 0..=fock_cap {
                    for n2 in 0..=fock_cap {
                        for n3 in 0..=fock_cap {
                            let label = BasisLabel::new([a1, a2, a3], [n1, n2, n3]);
                            if sector_cap.map_or(true, |cap| label.excitation() <= cap) {
                                basis.push(label);
                            }
                        }
                    }
                }
            }
        }
    }
    let index_of = basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    Ok(Arc::new(HilbertSpace {
        fock_cap,
        sector_cap,
        basis,
        index_of,
    }))
}

impl HilbertSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn fock_cap(&self) -> usize {
        self.fock_cap
    }

    pub fn sector_cap(&self) -> Option<usize> {
        self.sector_cap
    }

    pub fn basis(&self) -> &[BasisLabel] {
        &self.basis
    }

    pub fn label(&self, index: usize) -> BasisLabel {
        self.basis[index]
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.index_of.get(label).copied()
    }

    pub fn basis_ket(&self, label: &BasisLabel) -> Option<StateVector> {
        let i = self.index_of(label)?;
        let mut v = StateVector::zeros(self.dim());
        v[i] = C64::new(1.0, 0.0);
        Some(v)
    }

    /// Smallest set of basis indices containing `seeds` that every operator in
    /// `ops` maps into itself (reachability over the sparsity pattern).
    pub fn invariant_closure(&self, seeds: &[usize], ops: &[&CsrMatrix]) -> Vec<usize> {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); self.dim()];
        for op in ops {
            for (r, c, _) in op.triplets() {
                adjacency[c].push(r);
            }
        }
        let mut seen = vec![false; self.dim()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &r in &adjacency[j] {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        (0..self.dim()).filter(|&i| seen[i]).collect()
    }
}

/// Complex sparse matrix acting on a particular [`HilbertSpace`].
#[derive(Clone, Debug)]
pub struct SparseOperator {
    space: Arc<HilbertSpace>,
    matrix: CsrMatrix,
    dropped: usize,
}

impl SparseOperator {
    pub fn from_csr(space: Arc<HilbertSpace>, matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self {
            space,
            matrix,
            dropped: 0,
        })
    }

    pub fn zero(space: &Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            matrix: CsrMatrix::zeros(d, d),
            dropped: 0,
        }
    }

    pub fn identity(space: &Arc<HilbertSpace>) -> Self {
        let d = space.dim();
        let t = (0..d).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self {
            space: space.clone(),
            matrix: CsrMatrix::from_triplets(d, d, t),
            dropped: 0,
        }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Matrix elements discarded because their target label lies outside the
    /// (sector-restricted) space.
    pub fn dropped_elements(&self) -> usize {
        self.dropped
    }

    pub fn element(&self, bra: &BasisLabel, ket: &BasisLabel) -> Option<C64> {
        Some(self.matrix.get(self.space.index_of(bra)?, self.space.index_of(ket)?))
    }

    pub fn adjoint(&self) -> Self {
        self.with_matrix(self.matrix.adjoint())
    }

    pub fn scaled(&self, s: impl Into<C64>) -> Self {
        self.with_matrix(self.matrix.scale(s.into()))
    }

    pub fn plus(&self, other: &Self) -> Self {
        self.check_same_space(other);
        let mut out = self.with_matrix(self.matrix.add(&other.matrix));
        out.dropped += other.dropped;
        out
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        self.check_same_space(other);
        self.with_matrix(self.matrix.matmul(&other.matrix))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).plus(&other.compose(self).scaled(-1.0))
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector::from_vec(self.matrix.mul_vec(psi.as_slice()))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        if self.matrix.nnz() == 0 {
            return 0.0;
        }
        self.matrix.hermiticity_defect()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    fn with_matrix(&self, matrix: CsrMatrix) -> Self {
        Self {
            space: self.space.clone(),
            matrix,
            dropped: self.dropped,
        }
    }

    fn check_same_space(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.space, &other.space) || self.space.basis == other.space.basis,
            "operators act on different spaces"
        );
    }
}

fn check_site(what: &'static str, k: usize) -> Result<usize> {
    if (1..=3).contains(&k) {
        Ok(k - 1)
    } else {
        Err(Error::IndexOutOfRange {
            what,
            index: k,
            valid: "1..=3",
        })
    }
}

/// Annihilation operator `a_k` of cavity `k` (1-based).
pub fn cavity_lowering(space: &Arc<HilbertSpace>, k: usize) -> Result<SparseOperator> {
    let k = check_site("cavity", k)?;
    let mut t = Vec::new();
    let mut dropped = 0;
    for (col, label) in space.basis().iter().enumerate() {
        let n = label.photons[k];
        if n == 0 {
            continue;
        }
        let mut target = *label;
        target.photons[k] -= 1;
        match space.index_of(&target) {
            Some(row) => t.push((row, col, C64::new((n as f64).sqrt(), 0.0))),
            None => dropped += 1,
        }
    }
    let d = space.dim();
    Ok(SparseOperator {
        space: space.clone(),
        matrix: CsrMatrix::from_triplets(d, d, t),
        dropped,
    })
}

/// Atomic transition `σ^i_{to,from} = Σ |…to…⟩⟨…from…|` on atom `i` (1-based).
pub fn atom_transition(space: &Arc<HilbertSpace>, i: usize, from: Level, to: Level) -> Result<SparseOperator> {
    let i = check_site("atom", i)?;
    let mut t = Vec::new();
    let mut dropped = 0;
    for (col, label) in space.basis().iter().enumerate() {
        if label.atoms[i] != from {
            continue;
        }
        let mut target = *label;
        target.atoms[i] = to;
        match space.index_of(&target) {
            Some(row) => t.push((row, col, C64::new(1.0, 0.0))),
            None => dropped += 1,
        }
    }
    let d = space.dim();
    Ok(SparseOperator {
        space: space.clone(),
        matrix: CsrMatrix::from_triplets(d, d, t),
        dropped,
    })
}

/// Diagonal operator carrying the excitation count `C` of each basis label.
pub fn excitation_counter(space: &Arc<HilbertSpace>) -> SparseOperator {
    let d = space.dim();
    let t = space
        .basis()
        .iter()
        .enumerate()
        .map(|(i, l)| (i, i, C64::new(l.excitation() as f64, 0.0)))
        .collect();
    SparseOperator {
        space: space.clone(),
        matrix: CsrMatrix::from_triplets(d, d, t),
        dropped: 0,
    }
}

/// Embeds qubit basis state `q` (control-first, `q = 4 q2 + 2 q1 + q3`) with
/// all cavities in vacuum.
pub fn qubit_embedding(space: &HilbertSpace, q: usize) -> Result<StateVector> {
    let label = BasisLabel::from_qubit(q)?;
    space.basis_ket(&label).ok_or(Error::IndexOutOfRange {
        what: "qubit basis (not in space)",
        index: q,
        valid: "0..=7",
    })
}

/// Partial trace over the cavities followed by restriction of every atom to
/// its qubit levels, in control-first ordering.
pub fn qubit_extraction(space: &HilbertSpace, w: &DMatrix<C64>) -> Result<QubitMatrix> {
    if w.nrows() != space.dim() || w.ncols() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: w.nrows(),
        });
    }
    let labels = space.basis();
    Ok(extract_block(labels, labels, |r, c| w[(r, c)]))
}

/// Extraction for an operator whose rows and columns live on (possibly
/// different) lists of basis labels.
pub(crate) fn extract_block(
    rows: &[BasisLabel],
    cols: &[BasisLabel],
    entry: impl Fn(usize, usize) -> C64,
) -> QubitMatrix {
    let mut out = QubitMatrix::zeros();
    let mut by_cavity: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
    for (c, label) in cols.iter().enumerate() {
        if let Some(q) = label.qubit_index() {
            by_cavity.entry(label.photons).or_default().push((c, q));
        }
    }
    for (r, label) in rows.iter().enumerate() {
        let Some(qr) = label.qubit_index() else { continue };
        if let Some(partners) = by_cavity.get(&label.photons) {
            for &(c, qc) in partners {
                out[(qr, qc)] += entry(r, c);
            }
        }
    }
    out
}
