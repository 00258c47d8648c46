//! Drive schedules and gate-time formulas.
//!
//! Both schemes drive the outer atoms with opposite signs,
//! `Ω1(t) = +A(t)` and `Ω3(t) = -A(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// `A(t) = Ω`.
    Constant,
    /// `A(t) = 2 Ω_max sin²(√(2/3) Ω_max t)`.
    Adiabatic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub shape: PulseShape,
    /// `Ω_max` for the adiabatic shape, `Ω` for the constant one.
    pub peak: f64,
    pub gate_time: f64,
}

impl DriveSchedule {
    /// Adiabatic pulse over the resonant gate time `√3π / (√2 Ω_max)`.
    pub fn adiabatic(omega_max: f64) -> Result<Self> {
        Ok(Self {
            shape: PulseShape::Adiabatic,
            peak: omega_max,
            gate_time: resonant_gate_time(omega_max)?,
        })
    }

    pub fn constant(omega: f64, gate_time: f64) -> Result<Self> {
        positive("omega", omega)?;
        positive("gate_time", gate_time)?;
        Ok(Self {
            shape: PulseShape::Constant,
            peak: omega,
            gate_time,
        })
    }

    /// Constant drive meeting the resonant area condition, `T = √3π / (√2 Ω)`.
    pub fn resonant_constant(omega: f64) -> Result<Self> {
        Self::constant(omega, resonant_gate_time(omega)?)
    }

    /// Constant drive over the dispersive gate time `gπ / Ω²`.
    pub fn dispersive(omega: f64, g: f64) -> Result<Self> {
        Self::constant(omega, dispersive_gate_time(omega, g)?)
    }

    /// Envelope `A(t)`.
    pub fn amplitude(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Constant => self.peak,
            PulseShape::Adiabatic => adiabatic_amplitude(self.peak, t),
        }
    }

    pub fn omega1(&self, t: f64) -> f64 {
        self.amplitude(t)
    }

    pub fn omega3(&self, t: f64) -> f64 {
        -self.amplitude(t)
    }

    pub fn is_constant(&self) -> bool {
        self.shape == PulseShape::Constant
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub fn adiabatic_amplitude(omega_max: f64, t: f64) -> f64 {
    let s = ((2.0f64 / 3.0).sqrt() * omega_max * t).sin();
    2.0 * omega_max * s * s
}

pub fn resonant_gate_time(omega_max: f64) -> Result<f64> {
    positive("omega_max", omega_max)?;
    Ok(3f64.sqrt() * PI / (2f64.sqrt() * omega_max))
}

pub fn dispersive_gate_time(omega: f64, g: f64) -> Result<f64> {
    positive("omega", omega)?;
    positive("g", g)?;
    Ok(g * PI / (omega * omega))
}

/// `∫₀ᵀ A(t)/√3 dt`, by adaptive Simpson quadrature.
pub fn pulse_area(schedule: &DriveSchedule) -> f64 {
    let f = |t: f64| schedule.amplitude(t) / 3f64.sqrt();
    adaptive_simpson(&f, 0.0, schedule.gate_time, 1e-11)
}

/// Adaptive Simpson rule with Richardson correction. `tol` is absolute on
/// the whole interval and is split between halves on refinement.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // the adiabatic envelope vanishes at both ends of its period, so seed
    // with a few panels to avoid a spurious early exit on symmetric zeros
    let panels = 8;
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * width, a + (k + 1) as f64 * width);
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            simpson_refine(f, lo, hi, flo, fmid, fhi, whole, tol / panels as f64, 50)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adiabatic_envelope_endpoints() {
        let om = 0.05;
        let t = resonant_gate_time(om).unwrap();
        assert_eq!(adiabatic_amplitude(om, 0.0), 0.0);
        assert!((adiabatic_amplitude(om, t / 2.0) - 2.0 * om).abs() < 1e-15);
        assert!(adiabatic_amplitude(om, t).abs() < 1e-15);
    }

    #[test]
    fn resonant_gate_times() {
        assert!((resonant_gate_time(0.05).unwrap() - 76.9530).abs() < 1e-3);
        assert!((resonant_gate_time(0.1).unwrap() - 38.4765).abs() < 1e-3);
        let ratio = resonant_gate_time(0.03).unwrap() / resonant_gate_time(0.06).unwrap();
        assert!((ratio - 2.0).abs() < 1e-14);
        assert!(resonant_gate_time(0.0).is_err());
    }

    #[test]
    fn dispersive_gate_times() {
        assert!((dispersive_gate_time(0.02, 1.0).unwrap() - 7853.9816).abs() < 1e-3);
        assert!((dispersive_gate_time(0.1, 1.0).unwrap() - 314.1593).abs() < 1e-3);
        let ratio = dispersive_gate_time(0.01, 1.0).unwrap() / dispersive_gate_time(0.04, 1.0).unwrap();
        assert!((ratio - 16.0).abs() < 1e-12);
    }

    #[test]
    fn pulse_areas() {
        let target = PI / 2f64.sqrt();
        for om in [0.01, 0.05, 0.1, 0.37] {
            let s = DriveSchedule::adiabatic(om).unwrap();
            assert!((pulse_area(&s) - target).abs() < 1e-8, "omega_max = {om}");
        }
        let s = DriveSchedule::resonant_constant(0.05).unwrap();
        assert!((pulse_area(&s) - target).abs() < 1e-10);
        let zero = DriveSchedule {
            shape: PulseShape::Constant,
            peak: 0.0,
            gate_time: 10.0,
        };
        assert_eq!(pulse_area(&zero), 0.0);
    }

    #[test]
    fn schedule_signs_and_purity() {
        let s = DriveSchedule::adiabatic(0.05).unwrap();
        for k in 0..50 {
            let t = s.gate_time * k as f64 / 49.0;
            assert!(s.amplitude(t) >= 0.0);
            assert_eq!(s.omega1(t), -s.omega3(t));
            assert_eq!(s.amplitude(t).to_bits(), s.amplitude(t).to_bits());
        }
    }
}
