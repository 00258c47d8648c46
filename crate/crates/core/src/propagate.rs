//! Schrödinger and Lindblad propagation with time-dependent drives.
//!
//! The master equation is integrated in the form
//!
//! ```text
//! dρ/dt = −i[H(t), ρ] − ½{Σ_k L_k†L_k, ρ} + Σ_k L_k ρ L_k†
//! ```
//!
//! with jump operators `√κ a_i` (cavity loss) and `√(γ/2) |j⟩⟨e|` on each
//! atom for `j ∈ {0, 1}`. All right-hand sides work on rectangular blocks
//! whose rows and columns live on (possibly different) invariant subsets of
//! the basis; a full-space evolution is the special case where both subsets
//! are the whole basis.
//!
//! Two steppers are available. Fixed-step RK4 samples the drive at the
//! sub-stage times `t, t + dt/2, t + dt`. For generators with no time
//! dependence a truncated Taylor series of the exponential is used over
//! sub-steps of norm at most [`TAYLOR_THETA`], summed until the next term is
//! below double precision.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{atom_transition, cavity_lowering, BasisLabel, DensityMatrix, HilbertSpace, Level, SparseOperator, StateVector};
use crate::sparse::CsrMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Norm bound per Taylor sub-step.
pub const TAYLOR_THETA: f64 = 4.0;
const TAYLOR_MAX_TERMS: usize = 80;
const DRIFT_LIMIT: f64 = 1e-4;

/// Scalar weight of one Hamiltonian term.
#[derive(Clone)]
pub enum Coefficient {
    Static(f64),
    Dynamic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn dynamic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Dynamic(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Coefficient::Static(c) => *c,
            Coefficient::Dynamic(f) => f(t),
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Coefficient::Static(_))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Static(c) => write!(f, "Static({c})"),
            Coefficient::Dynamic(_) => write!(f, "Dynamic(..)"),
        }
    }
}

/// `H(t) = Σ_k c_k(t) H_k`.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    space: Arc<HilbertSpace>,
    terms: Vec<(SparseOperator, Coefficient)>,
}

impl TimeDependentHamiltonian {
    pub fn new(static_part: SparseOperator) -> Self {
        Self {
            space: static_part.space().clone(),
            terms: vec![(static_part, Coefficient::Static(1.0))],
        }
    }

    pub fn with_term(mut self, op: SparseOperator, coefficient: Coefficient) -> Self {
        assert_eq!(op.dim(), self.space.dim(), "term acts on a different space");
        self.terms.push((op, coefficient));
        self
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn terms(&self) -> &[(SparseOperator, Coefficient)] {
        &self.terms
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_static())
    }

    /// Assembles `H(t)`.
    pub fn at(&self, t: f64) -> SparseOperator {
        self.terms
            .iter()
            .fold(SparseOperator::zero(&self.space), |acc, (op, c)| acc.plus(&op.scaled(c.at(t))))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Cavity decay rate, identical for the three cavities.
    pub kappa: f64,
    /// Total decay rate of |e⟩, split evenly into |0⟩ and |1⟩.
    pub gamma: f64,
}

impl DecayParams {
    pub fn new(kappa: f64, gamma: f64) -> Result<Self> {
        for (name, value) in [("kappa", kappa), ("gamma", gamma)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        Ok(Self { kappa, gamma })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 0.0
    }

    /// Jump operators with their rates folded in (`√rate · L`).
    pub fn jump_operators(&self, space: &Arc<HilbertSpace>) -> Vec<SparseOperator> {
        let mut out = Vec::new();
        if self.kappa > 0.0 {
            for k in 1..=3 {
                out.push(cavity_lowering(space, k).unwrap().scaled(self.kappa.sqrt()));
            }
        }
        if self.gamma > 0.0 {
            let amp = (self.gamma / 2.0).sqrt();
            for n in 1..=3 {
                for j in [Level::Zero, Level::One] {
                    out.push(atom_transition(space, n, Level::Excited, j).unwrap().scaled(amp));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    /// Truncated Taylor exponential; only for time-independent generators.
    Taylor,
    /// Taylor when the generator is time-independent, RK4 otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// RK4 step in units of 1/g (an upper bound: the step is shrunk so that
    /// samples fall exactly on step boundaries).
    pub dt: f64,
    /// Number of evenly spaced samples including `t = 0` and `t = T`.
    pub samples: usize,
    pub method: Method,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            samples: 500,
            method: Method::Rk4,
        }
    }
}

impl EvolveOptions {
    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn with_samples(self, samples: usize) -> Self {
        Self { samples, ..self }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub space: Arc<HilbertSpace>,
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// RK4 step actually used (zero for Taylor stepping).
    pub dt: f64,
    pub method: Method,
}

impl<S> Trajectory<S> {
    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory always holds t = 0")
    }
}

/// One side (rows or columns) of a propagated block.
#[derive(Clone, Debug)]
pub(crate) struct Side {
    h_terms: Vec<(CsrMatrix, Coefficient)>,
    /// Diagonal of `½ Σ_k L_k†L_k`.
    damping: Vec<f64>,
    jumps: Vec<CsrMatrix>,
}

impl Side {
    pub(crate) fn new(hamiltonian: &TimeDependentHamiltonian, jumps: &[SparseOperator], indices: &[usize]) -> Self {
        let h_terms = hamiltonian
            .terms()
            .iter()
            .map(|(op, c)| (op.matrix().restrict(indices), c.clone()))
            .collect();
        let mut damping = vec![0.0; indices.len()];
        let mut restricted = Vec::with_capacity(jumps.len());
        for l in jumps {
            let ll = l.adjoint().compose(l);
            for (new, &old) in indices.iter().enumerate() {
                damping[new] += 0.5 * ll.matrix().get(old, old).re;
            }
            restricted.push(l.matrix().restrict(indices));
        }
        Self {
            h_terms,
            damping,
            jumps: restricted,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.damping.len()
    }

    fn is_autonomous(&self) -> bool {
        self.h_terms.iter().all(|(_, c)| c.is_static())
    }

    fn h_norm(&self) -> f64 {
        self.h_terms
            .iter()
            .map(|(m, c)| {
                let scale = match c {
                    Coefficient::Static(x) => x.abs(),
                    Coefficient::Dynamic(_) => f64::INFINITY,
                };
                m.one_norm() * scale
            })
            .sum()
    }
}

trait Flow {
    fn len(&self) -> usize;
    fn rhs(&self, t: f64, x: &[C64], out: &mut [C64], scratch: &mut Vec<C64>);
    fn is_autonomous(&self) -> bool;
    fn norm_bound(&self) -> f64;
}

/// `dψ/dt = −i H(t) ψ`
struct KetFlow<'a> {
    side: &'a Side,
}

impl Flow for KetFlow<'_> {
    fn len(&self) -> usize {
        self.side.dim()
    }

    fn rhs(&self, t: f64, x: &[C64], out: &mut [C64], _scratch: &mut Vec<C64>) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for (h, c) in &self.side.h_terms {
            let c = c.at(t);
            if c != 0.0 {
                h.mul_vec_acc(-I * c, x, out);
            }
        }
    }

    fn is_autonomous(&self) -> bool {
        self.side.is_autonomous()
    }

    fn norm_bound(&self) -> f64 {
        self.side.h_norm()
    }
}

/// Lindblad right-hand side on a row-major `rows × cols` block.
struct BlockFlow<'a> {
    rows: &'a Side,
    cols: &'a Side,
}

impl Flow for BlockFlow<'_> {
    fn len(&self) -> usize {
        self.rows.dim() * self.cols.dim()
    }

    fn rhs(&self, t: f64, x: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let (nr, nc) = (self.rows.dim(), self.cols.dim());
        // damping first, it overwrites
        for i in 0..nr {
            let di = self.rows.damping[i];
            let row = &mut out[i * nc..(i + 1) * nc];
            let xrow = &x[i * nc..(i + 1) * nc];
            for j in 0..nc {
                row[j] = -xrow[j] * (di + self.cols.damping[j]);
            }
        }
        for ((hl, cl), (hr, _)) in self.rows.h_terms.iter().zip(&self.cols.h_terms) {
            let c = cl.at(t);
            if c == 0.0 {
                continue;
            }
            let minus_ic = -I * c;
            // −i c H ρ
            for i in 0..nr {
                let dst = &mut out[i * nc..(i + 1) * nc];
                for (k, h) in hl.row(i) {
                    let w = minus_ic * h;
                    for (o, &v) in dst.iter_mut().zip(&x[k * nc..(k + 1) * nc]) {
                        *o += w * v;
                    }
                }
            }
            // + i c ρ H
            let plus_ic = I * c;
            for i in 0..nr {
                let (xrow, orow) = (&x[i * nc..(i + 1) * nc], i * nc);
                for (k, &xik) in xrow.iter().enumerate() {
                    if xik == ZERO {
                        continue;
                    }
                    let w = plus_ic * xik;
                    for (j, h) in hr.row(k) {
                        out[orow + j] += w * h;
                    }
                }
            }
        }
        // Σ L ρ L†
        for (ll, lr) in self.rows.jumps.iter().zip(&self.cols.jumps) {
            scratch.clear();
            scratch.resize(nr * nc, ZERO);
            let mut any = false;
            for i in 0..nr {
                for (k, l) in ll.row(i) {
                    any = true;
                    let src = &x[k * nc..(k + 1) * nc];
                    let dst = &mut scratch[i * nc..(i + 1) * nc];
                    for (d, &v) in dst.iter_mut().zip(src) {
                        *d += l * v;
                    }
                }
            }
            if !any {
                continue;
            }
            for j in 0..nc {
                for (k, l) in lr.row(j) {
                    let lc = l.conj();
                    for i in 0..nr {
                        out[i * nc + j] += scratch[i * nc + k] * lc;
                    }
                }
            }
        }
    }

    fn is_autonomous(&self) -> bool {
        self.rows.is_autonomous()
    }

    fn norm_bound(&self) -> f64 {
        let damp = |s: &Side| s.damping.iter().copied().fold(0.0, f64::max);
        let jumps: f64 = self
            .rows
            .jumps
            .iter()
            .zip(&self.cols.jumps)
            .map(|(a, b)| a.one_norm() * b.one_norm())
            .sum();
        self.rows.h_norm() + self.cols.h_norm() + damp(self.rows) + damp(self.cols) + jumps
    }
}

struct Workspace {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
    scratch: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || vec![ZERO; n];
        Self {
            k1: z(),
            k2: z(),
            k3: z(),
            k4: z(),
            tmp: z(),
            scratch: Vec::new(),
        }
    }
}

fn rk4_steps(flow: &dyn Flow, mut t: f64, dt: f64, steps: usize, x: &mut [C64], ws: &mut Workspace) {
    let half = 0.5 * dt;
    for _ in 0..steps {
        flow.rhs(t, x, &mut ws.k1, &mut ws.scratch);
        axpy_into(&mut ws.tmp, x, half, &ws.k1);
        flow.rhs(t + half, &ws.tmp, &mut ws.k2, &mut ws.scratch);
        axpy_into(&mut ws.tmp, x, half, &ws.k2);
        flow.rhs(t + half, &ws.tmp, &mut ws.k3, &mut ws.scratch);
        axpy_into(&mut ws.tmp, x, dt, &ws.k3);
        flow.rhs(t + dt, &ws.tmp, &mut ws.k4, &mut ws.scratch);
        let w = dt / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]) * w;
        }
        t += dt;
    }
}

#[inline]
fn axpy_into(out: &mut [C64], x: &[C64], a: f64, k: &[C64]) {
    for ((o, &xi), &ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * a;
    }
}

fn max_abs(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Advances an autonomous flow by `duration` with the Taylor stepper.
fn taylor_advance(flow: &dyn Flow, duration: f64, x: &mut [C64], ws: &mut Workspace) {
    if duration <= 0.0 {
        return;
    }
    let nu = flow.norm_bound();
    if nu == 0.0 {
        return;
    }
    let substeps = (nu * duration / TAYLOR_THETA).ceil().max(1.0) as usize;
    let h = duration / substeps as f64;
    for _ in 0..substeps {
        let floor = max_abs(x) * f64::EPSILON * 1e-2;
        ws.k1.copy_from_slice(x);
        for k in 1..=TAYLOR_MAX_TERMS {
            flow.rhs(0.0, &ws.k1, &mut ws.k2, &mut ws.scratch);
            let scale = h / k as f64;
            for (term, &d) in ws.k1.iter_mut().zip(&ws.k2) {
                *term = d * scale;
            }
            for (xi, &term) in x.iter_mut().zip(&ws.k1) {
                *xi += term;
            }
            if k as f64 > TAYLOR_THETA && max_abs(&ws.k1) <= floor {
                break;
            }
        }
    }
}

fn resolve(method: Method, autonomous: bool) -> Method {
    match method {
        Method::Auto if autonomous => Method::Taylor,
        Method::Auto => Method::Rk4,
        m => m,
    }
}

/// Integrates `flow` from `x0`, calling `observe(t, x)` at each of the sample
/// times, including `t = 0`.
fn integrate(
    flow: &dyn Flow,
    x0: Vec<C64>,
    t_final: f64,
    opts: &EvolveOptions,
    mut observe: impl FnMut(f64, &[C64]) -> Result<()>,
) -> Result<(Vec<C64>, f64, Method)> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_final,
            reason: "must be non-negative and finite",
        });
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: opts.dt,
            reason: "must be positive",
        });
    }
    let method = resolve(opts.method, flow.is_autonomous());
    if method == Method::Taylor && !flow.is_autonomous() {
        return Err(Error::InvalidParameter {
            name: "method",
            value: f64::NAN,
            reason: "Taylor stepping needs a time-independent generator",
        });
    }
    let mut x = x0;
    let mut ws = Workspace::new(flow.len());
    observe(0.0, &x)?;
    if t_final == 0.0 {
        return Ok((x, 0.0, method));
    }
    let segments = opts.samples.max(2) - 1;
    let seg_len = t_final / segments as f64;
    let per_seg = (seg_len / opts.dt).ceil().max(1.0) as usize;
    let dt = seg_len / per_seg as f64;
    for s in 0..segments {
        let t0 = s as f64 * seg_len;
        match method {
            Method::Taylor => taylor_advance(flow, seg_len, &mut x, &mut ws),
            _ => rk4_steps(flow, t0, dt, per_seg, &mut x, &mut ws),
        }
        let t = if s + 1 == segments { t_final } else { (s + 1) as f64 * seg_len };
        observe(t, &x)?;
    }
    let used_dt = if method == Method::Rk4 { dt } else { 0.0 };
    Ok((x, used_dt, method))
}

/// Propagates a ket with the Hamiltonian alone.
///
/// Only the invariant closure of the initial support is integrated; the
/// rest of the vector stays exactly zero.
pub fn evolve_state(
    hamiltonian: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory<StateVector>> {
    let space = hamiltonian.space().clone();
    if psi0.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: psi0.len(),
        });
    }
    let support: Vec<usize> = (0..space.dim()).filter(|&i| psi0[i] != ZERO).collect();
    let keep = closure(hamiltonian, &[], &support);
    let side = Side::new(hamiltonian, &[], &keep);
    let flow = KetFlow { side: &side };
    let norm0 = psi0.norm();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let x0 = keep.iter().map(|&i| psi0[i]).collect();
    let (_, dt, method) = integrate(&flow, x0, t_final, opts, |t, x| {
        let mut v = StateVector::zeros(space.dim());
        for (&i, &xi) in keep.iter().zip(x) {
            v[i] = xi;
        }
        let drift = (v.norm() - norm0).abs();
        if drift > DRIFT_LIMIT {
            return Err(Error::NormDrift { time: t, drift, dt: opts.dt });
        }
        times.push(t);
        states.push(v);
        Ok(())
    })?;
    Ok(Trajectory {
        space,
        times,
        states,
        dt,
        method,
    })
}

/// Propagates a density operator under the master equation. Any square
/// operator is accepted (the generator is linear); the trace is monitored.
///
/// Rows and columns are restricted to the invariant closures of the rows
/// and columns that are initially occupied.
pub fn evolve_density(
    hamiltonian: &TimeDependentHamiltonian,
    decay: &DecayParams,
    rho0: &DensityMatrix,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory<DensityMatrix>> {
    let space = hamiltonian.space().clone();
    let d = space.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.nrows(),
        });
    }
    let jumps = decay.jump_operators(&space);
    let occupied_rows: Vec<usize> = (0..d).filter(|&i| rho0.row(i).iter().any(|v| *v != ZERO)).collect();
    let occupied_cols: Vec<usize> = (0..d).filter(|&j| rho0.column(j).iter().any(|v| *v != ZERO)).collect();
    let rows = closure(hamiltonian, &jumps, &occupied_rows);
    let cols = closure(hamiltonian, &jumps, &occupied_cols);
    let row_side = Side::new(hamiltonian, &jumps, &rows);
    let col_side = Side::new(hamiltonian, &jumps, &cols);
    let flow = BlockFlow {
        rows: &row_side,
        cols: &col_side,
    };
    let x0 = rows.iter().flat_map(|&i| cols.iter().map(move |&j| rho0[(i, j)])).collect();
    let trace0 = rho0.trace();
    let nc = cols.len();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, dt, method) = integrate(&flow, x0, t_final, opts, |t, x| {
        let mut rho = DensityMatrix::zeros(d, d);
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                rho[(i, j)] = x[r * nc + c];
            }
        }
        let drift = (rho.trace() - trace0).norm();
        if drift > DRIFT_LIMIT {
            return Err(Error::TraceDrift { time: t, drift, dt: opts.dt });
        }
        times.push(t);
        states.push(rho);
        Ok(())
    })?;
    Ok(Trajectory {
        space,
        times,
        states,
        dt,
        method,
    })
}

/// Invariant closure of `seeds` under every Hamiltonian term and jump.
pub(crate) fn closure(hamiltonian: &TimeDependentHamiltonian, jumps: &[SparseOperator], seeds: &[usize]) -> Vec<usize> {
    let pattern: Vec<&CsrMatrix> = hamiltonian
        .terms()
        .iter()
        .map(|(op, _)| op.matrix())
        .chain(jumps.iter().map(SparseOperator::matrix))
        .collect();
    hamiltonian.space().invariant_closure(seeds, &pattern)
}

/// Final ket on an invariant index subset, no sampling.
pub(crate) fn evolve_ket_block(side: &Side, x0: Vec<C64>, t_final: f64, opts: &EvolveOptions) -> Result<Vec<C64>> {
    let flow = KetFlow { side };
    let opts = EvolveOptions { samples: 2, ..*opts };
    Ok(integrate(&flow, x0, t_final, &opts, |_, _| Ok(()))?.0)
}

/// Final row-major block `rows × cols`, no sampling.
pub(crate) fn evolve_density_block(
    rows: &Side,
    cols: &Side,
    x0: Vec<C64>,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<Vec<C64>> {
    let flow = BlockFlow { rows, cols };
    let opts = EvolveOptions { samples: 2, ..*opts };
    Ok(integrate(&flow, x0, t_final, &opts, |_, _| Ok(()))?.0)
}

/// Anything whose basis-state populations can be read off.
pub trait Populations {
    fn population(&self, index: usize) -> f64;
}

impl Populations for DVector<C64> {
    fn population(&self, index: usize) -> f64 {
        self[index].norm_sqr()
    }
}

impl Populations for DMatrix<C64> {
    fn population(&self, index: usize) -> f64 {
        self[(index, index)].re
    }
}

/// Time series of basis-state populations.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTable {
    pub times: Vec<f64>,
    pub labels: Vec<BasisLabel>,
    /// `columns[k][s]` is the population of `labels[k]` at `times[s]`.
    pub columns: Vec<Vec<f64>>,
}

impl PopulationTable {
    pub fn column(&self, label: &BasisLabel) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|k| self.columns[k].as_slice())
    }

    pub fn final_value(&self, label: &BasisLabel) -> Option<f64> {
        self.column(label).and_then(|c| c.last().copied())
    }
}

pub fn population_series<S: Populations>(traj: &Trajectory<S>, targets: &[BasisLabel]) -> Result<PopulationTable> {
    let mut columns = Vec::with_capacity(targets.len());
    for label in targets {
        let index = traj.space.index_of(label).ok_or_else(|| Error::config("targets", format!("{label} is not in the space")))?;
        columns.push(traj.states.iter().map(|s| s.population(index)).collect());
    }
    Ok(PopulationTable {
        times: traj.times.clone(),
        labels: targets.to_vec(),
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_space;
    use crate::model::{driven_hamiltonian, full_hamiltonian, PhysParams};
    use crate::pulses::DriveSchedule;

    fn sector() -> Arc<HilbertSpace> {
        build_space(2, Some(2)).unwrap()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(SparseOperator::zero(&s));
        let psi = s.basis_ket(&BasisLabel::ket("110", "000")).unwrap();
        let traj = evolve_state(&h, &psi, 5.0, &EvolveOptions::default().with_samples(3)).unwrap();
        assert_eq!(traj.final_state(), &psi);
        assert_eq!(traj.times, vec![0.0, 2.5, 5.0]);
    }

    #[test]
    fn taylor_matches_rk4_for_static_drive() {
        let s = sector();
        let sched = DriveSchedule::dispersive(0.1, 1.0).unwrap();
        let h = driven_hamiltonian(&s, &PhysParams::dispersive(), &sched);
        assert!(h.is_time_independent());
        let psi = s.basis_ket(&BasisLabel::ket("110", "000")).unwrap();
        let opts = EvolveOptions::default().with_samples(2);
        let a = evolve_state(&h, &psi, 40.0, &opts).unwrap();
        let b = evolve_state(&h, &psi, 40.0, &opts.with_method(Method::Taylor)).unwrap();
        let exact = (h.at(0.0).to_dense() * C64::new(0.0, -40.0)).exp() * &psi;
        assert!((b.final_state() - &exact).camax() < 1e-11);
        assert!((a.final_state() - &exact).camax() < 1e-6);
    }

    #[test]
    fn taylor_rejects_time_dependent_generators() {
        let s = sector();
        let sched = DriveSchedule::adiabatic(0.05).unwrap();
        let h = driven_hamiltonian(&s, &PhysParams::resonant(), &sched);
        let psi = s.basis_ket(&BasisLabel::ket("110", "000")).unwrap();
        let opts = EvolveOptions::default().with_method(Method::Taylor);
        assert!(evolve_state(&h, &psi, 1.0, &opts).is_err());
    }

    #[test]
    fn unitary_limit_of_master_equation() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(full_hamiltonian(&s, &PhysParams::resonant(), 0.3, -0.2));
        let psi = (s.basis_ket(&BasisLabel::ket("110", "000")).unwrap()
            + s.basis_ket(&BasisLabel::ket("101", "000")).unwrap())
            / C64::new(2f64.sqrt(), 0.0);
        let opts = EvolveOptions::default().with_samples(2);
        let ket = evolve_state(&h, &psi, 3.0, &opts).unwrap();
        let rho = evolve_density(&h, &DecayParams::none(), &(&psi * psi.adjoint()), 3.0, &opts).unwrap();
        let p = ket.final_state();
        assert!((p * p.adjoint() - rho.final_state()).camax() < 1e-6);
    }

    #[test]
    fn cavity_decay_is_exponential() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(SparseOperator::zero(&s));
        let psi = s.basis_ket(&BasisLabel::ket("000", "001")).unwrap();
        let kappa = 0.3;
        let decay = DecayParams::new(kappa, 0.0).unwrap();
        let traj = evolve_density(&h, &decay, &(&psi * psi.adjoint()), 4.0, &EvolveOptions::default().with_samples(5)).unwrap();
        let table = population_series(&traj, &[BasisLabel::ket("000", "001"), BasisLabel::ket("000", "000")]).unwrap();
        for (k, t) in table.times.iter().enumerate() {
            assert!((table.columns[0][k] - (-kappa * t).exp()).abs() < 1e-9);
            assert!((table.columns[1][k] - (1.0 - (-kappa * t).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn atomic_decay_branches_evenly() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(SparseOperator::zero(&s));
        let psi = s.basis_ket(&BasisLabel::ket("0e0", "000")).unwrap();
        let gamma = 0.2;
        let decay = DecayParams::new(0.0, gamma).unwrap();
        let traj = evolve_density(&h, &decay, &(&psi * psi.adjoint()), 5.0, &EvolveOptions::default().with_samples(6)).unwrap();
        let table = population_series(&traj, &[BasisLabel::ket("000", "000"), BasisLabel::ket("010", "000")]).unwrap();
        for (k, t) in table.times.iter().enumerate() {
            let expect = 0.5 * (1.0 - (-gamma * t).exp());
            assert!((table.columns[0][k] - expect).abs() < 1e-9);
            assert!((table.columns[1][k] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn samples_are_evenly_spaced_and_end_at_t() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(full_hamiltonian(&s, &PhysParams::resonant(), 0.1, -0.1));
        let psi = s.basis_ket(&BasisLabel::ket("110", "000")).unwrap();
        let traj = evolve_state(&h, &psi, 7.3, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.times.len(), 500);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 7.3);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.dt <= 0.01);
    }

    #[test]
    fn norm_drift_aborts() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(full_hamiltonian(&s, &PhysParams::resonant(), 0.1, -0.1));
        let psi = s.basis_ket(&BasisLabel::ket("110", "000")).unwrap();
        let err = evolve_state(&h, &psi, 200.0, &EvolveOptions::default().with_dt(2.0).with_samples(2)).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }));
    }

    #[test]
    fn population_series_rejects_unknown_labels() {
        let s = sector();
        let h = TimeDependentHamiltonian::new(SparseOperator::zero(&s));
        let psi = s.basis_ket(&BasisLabel::ket("110", "000")).unwrap();
        let traj = evolve_state(&h, &psi, 1.0, &EvolveOptions::default().with_samples(2)).unwrap();
        assert!(population_series(&traj, &[BasisLabel::ket("1e1", "000")]).is_err());
    }
}
