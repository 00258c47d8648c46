//! Experiment runner behind the `fredkin` binary.
//!
//! A run is described by an [`ExperimentConfig`], read from a flat
//! `key = value` file and/or overridden key by key. Rates are ratios to `g`
//! and times are in units of `1/g`. Every output file starts with a `#`
//! header holding the resolved configuration, and nothing in a run depends on
//! wall-clock time unless `timing = true`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{average_gate_fidelity, fredkin_ideal, reconstruct_channel, GateConfig, Scheme};
use crate::error::{Error, Result};
use crate::hilbert::{build_space, qubit_embedding, BasisLabel, QUBIT_DIM};
use crate::model::{driven_hamiltonian, PhysParams};
use crate::propagate::{evolve_density, evolve_state, population_series, DecayParams, EvolveOptions, Method, PopulationTable};
use crate::pulses::PulseShape;

fn config(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::config(field, message)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Populations,
    Fidelity,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    /// Drive strength `Ω_max/g` or `Ω/g`.
    Omega,
    Kappa,
    Gamma,
    /// `κ = γ`, varied together.
    KappaGamma,
}

impl SweepParam {
    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::Omega => "Omega_over_g",
            SweepParam::Kappa => "kappa_over_g",
            SweepParam::Gamma => "gamma_over_g",
            SweepParam::KappaGamma => "kappa_gamma_over_g",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepParam::Omega, SweepParam::Kappa, SweepParam::Gamma, SweepParam::KappaGamma]
            .into_iter()
            .find(|p| p.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                config(
                    "sweep_param",
                    format!("unknown parameter '{s}'; expected Omega_over_g, kappa_over_g, gamma_over_g or kappa_gamma_over_g"),
                )
            })
    }
}

/// Dissipation rates of a physical platform, as ratios to `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub kappa_over_g: f64,
    pub gamma_over_g: f64,
}

pub fn presets() -> [Preset; 2] {
    [
        Preset {
            name: "toroidal",
            description: "toroidal microcavity, (g, gamma, kappa) = 2pi x (750, 2.62, 3.5) MHz",
            kappa_over_g: 3.5 / 750.0,
            gamma_over_g: 2.62 / 750.0,
        },
        Preset {
            name: "nanocavity",
            description: "photonic-crystal nanocavity, g = 2.5e9 Hz, gamma = 1.6e7 Hz, kappa = 4e5 Hz",
            kappa_over_g: 4e5 / 2.5e9,
            gamma_over_g: 1.6e7 / 2.5e9,
        },
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| config("preset", format!("unknown preset '{name}'; expected toroidal or nanocavity")))
}

/// Default drive per scheme: `Ω_max = 0.05 g` resonant, `Ω = 0.02 g` dispersive.
pub fn default_drive(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Resonant => 0.05,
        Scheme::Dispersive => 0.02,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl SweepSpec {
    /// Evenly spaced ascending grid including both ends.
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.to } else { self.from + step * k as f64 })
            .collect()
    }
}

/// Fully resolved run description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub task: Task,
    /// One or more schemes; every scheme is run at every drive.
    pub schemes: Vec<Scheme>,
    pub j_over_g: f64,
    /// `None` picks 0 for resonant and 1 for dispersive.
    pub delta_over_g: Option<f64>,
    /// `None` picks [`default_drive`] per scheme.
    pub omega_over_g: Option<Vec<f64>>,
    pub kappa_over_g: f64,
    pub gamma_over_g: f64,
    /// `None` picks adiabatic for resonant and constant for dispersive.
    pub pulse: Option<PulseShape>,
    pub fock_cap: usize,
    pub sector_cap: Option<usize>,
    pub dt_over_invg: f64,
    /// Samples per trajectory for the populations task.
    pub samples: usize,
    pub sweep: Option<SweepSpec>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub preset: Option<String>,
    /// Record wall-clock seconds (breaks byte-reproducibility of outputs).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Fidelity,
            schemes: vec![Scheme::Resonant],
            j_over_g: 1.0,
            delta_over_g: None,
            omega_over_g: None,
            kappa_over_g: 0.0,
            gamma_over_g: 0.0,
            pulse: None,
            fock_cap: 2,
            sector_cap: Some(2),
            dt_over_invg: 0.01,
            samples: 500,
            sweep: None,
            output: None,
            format: Format::Csv,
            preset: None,
            timing: false,
        }
    }
}

pub const CONFIG_KEYS: [&str; 20] = [
    "task",
    "scheme",
    "J_over_g",
    "Delta_over_g",
    "Omega_over_g",
    "kappa_over_g",
    "gamma_over_g",
    "pulse",
    "fock_cap",
    "sector_cap",
    "dt_over_invg",
    "samples",
    "sweep_param",
    "sweep_from",
    "sweep_to",
    "sweep_points",
    "output",
    "format",
    "preset",
    "timing",
];

fn number(field: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| config(field, format!("'{value}' is not a number")))
}

fn count(field: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| config(field, format!("'{value}' is not a non-negative integer")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config("config", format!("line {}: expected key = value, got '{raw}'", n + 1)))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_pairs(&parse_pairs(&fs::read_to_string(path)?)?)
    }

    /// Builds from key/value pairs applied in order over the defaults; a
    /// preset is applied before any explicit rate.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some((_, name)) = pairs.iter().rev().find(|(k, _)| k == "preset") {
            cfg.set("preset", name)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Unknown keys are an error naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "task" => {
                self.task = match v.to_ascii_lowercase().as_str() {
                    "populations" => Task::Populations,
                    "fidelity" => Task::Fidelity,
                    "sweep" => Task::Sweep,
                    _ => return Err(config(key, format!("unknown task '{v}'"))),
                }
            }
            "scheme" => {
                self.schemes = if v.eq_ignore_ascii_case("both") {
                    vec![Scheme::Resonant, Scheme::Dispersive]
                } else {
                    list(v).map(Scheme::from_str).collect::<Result<_>>()?
                };
            }
            "J_over_g" => self.j_over_g = number(key, v)?,
            "Delta_over_g" => self.delta_over_g = Some(number(key, v)?),
            "Omega_over_g" => self.omega_over_g = Some(list(v).map(|x| number(key, x)).collect::<Result<_>>()?),
            "kappa_over_g" => self.kappa_over_g = number(key, v)?,
            "gamma_over_g" => self.gamma_over_g = number(key, v)?,
            "pulse" => {
                self.pulse = Some(match v.to_ascii_lowercase().as_str() {
                    "adiabatic" => PulseShape::Adiabatic,
                    "constant" => PulseShape::Constant,
                    _ => return Err(config(key, format!("unknown pulse '{v}'"))),
                })
            }
            "fock_cap" => self.fock_cap = count(key, v)?,
            "sector_cap" => {
                self.sector_cap = if v.eq_ignore_ascii_case("none") { None } else { Some(count(key, v)?) }
            }
            "dt_over_invg" => self.dt_over_invg = number(key, v)?,
            "samples" => self.samples = count(key, v)?,
            "sweep_param" => self.sweep_mut().param = SweepParam::from_str(v)?,
            "sweep_from" => self.sweep_mut().from = number(key, v)?,
            "sweep_to" => self.sweep_mut().to = number(key, v)?,
            "sweep_points" => self.sweep_mut().points = count(key, v)?,
            "output" => self.output = if v.is_empty() || v == "-" { None } else { Some(PathBuf::from(v)) },
            "format" => {
                self.format = match v.to_ascii_lowercase().as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(config(key, format!("unknown format '{v}'"))),
                }
            }
            "preset" => {
                let p = preset(v)?;
                self.kappa_over_g = p.kappa_over_g;
                self.gamma_over_g = p.gamma_over_g;
                self.preset = Some(p.name.to_string());
            }
            "timing" => {
                self.timing = match v.to_ascii_lowercase().as_str() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(config(key, format!("'{v}' is not a boolean"))),
                }
            }
            _ => return Err(config(key, "unknown configuration key")),
        }
        Ok(())
    }

    fn sweep_mut(&mut self) -> &mut SweepSpec {
        self.sweep.get_or_insert(SweepSpec {
            param: SweepParam::Omega,
            from: f64::NAN,
            to: f64::NAN,
            points: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ratios = [
            ("J_over_g", Some(self.j_over_g)),
            ("Delta_over_g", self.delta_over_g),
            ("kappa_over_g", Some(self.kappa_over_g)),
            ("gamma_over_g", Some(self.gamma_over_g)),
        ];
        for (name, value) in ratios {
            if let Some(x) = value {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(config(name, format!("must be a finite ratio >= 0, got {x}")));
                }
            }
        }
        if let Some(drives) = &self.omega_over_g {
            if drives.is_empty() || drives.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(config("Omega_over_g", "needs one or more positive drive strengths"));
            }
        }
        if self.schemes.is_empty() {
            return Err(config("scheme", "no scheme selected"));
        }
        if self.fock_cap == 0 {
            return Err(config("fock_cap", "must be at least 1"));
        }
        if !(self.dt_over_invg > 0.0 && self.dt_over_invg.is_finite()) {
            return Err(config("dt_over_invg", "must be positive"));
        }
        match self.task {
            Task::Populations => {
                if self.schemes.len() != 1 || self.drives(self.schemes[0]).len() != 1 {
                    return Err(config("scheme", "the populations task runs exactly one scheme at one drive"));
                }
                if self.samples < 2 {
                    return Err(config("samples", "need at least 2 samples"));
                }
            }
            Task::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| config("sweep_param", "the sweep task needs sweep_param, sweep_from, sweep_to and sweep_points"))?;
                if !s.from.is_finite() {
                    return Err(config("sweep_from", "missing"));
                }
                if !s.to.is_finite() {
                    return Err(config("sweep_to", "missing"));
                }
                if s.points == 0 {
                    return Err(config("sweep_points", "must be at least 1"));
                }
                if s.to < s.from || (s.points > 1 && s.to == s.from) {
                    return Err(config("sweep_to", "sweep range must be ascending"));
                }
                let lowest_ok = if s.param == SweepParam::Omega { s.from > 0.0 } else { s.from >= 0.0 };
                if !lowest_ok {
                    return Err(config("sweep_from", "outside the valid range of the swept parameter"));
                }
            }
            Task::Fidelity => {}
        }
        for &scheme in &self.schemes {
            self.gate(scheme, self.drives(scheme)[0])?.schedule()?;
        }
        Ok(())
    }

    pub fn drives(&self, scheme: Scheme) -> Vec<f64> {
        self.omega_over_g.clone().unwrap_or_else(|| vec![default_drive(scheme)])
    }

    pub fn decay(&self) -> DecayParams {
        DecayParams {
            kappa: self.kappa_over_g,
            gamma: self.gamma_over_g,
        }
    }

    /// Gate configuration for one scheme and drive.
    pub fn gate(&self, scheme: Scheme, drive: f64) -> Result<GateConfig> {
        let base = GateConfig::for_scheme(scheme, drive);
        let delta = self.delta_over_g.unwrap_or(base.params.delta);
        Ok(GateConfig {
            params: PhysParams::new(1.0, self.j_over_g, delta)?,
            pulse: self.pulse.unwrap_or(base.pulse),
            decay: self.decay(),
            fock_cap: self.fock_cap,
            sector_cap: self.sector_cap,
            evolve: EvolveOptions::default().with_dt(self.dt_over_invg).with_method(Method::Auto),
            ..base
        })
    }

    /// The resolved configuration as `key = value` lines.
    pub fn resolved(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        let task = match self.task {
            Task::Populations => "populations",
            Task::Fidelity => "fidelity",
            Task::Sweep => "sweep",
        };
        m.insert("task", task.to_string());
        m.insert("scheme", self.schemes.iter().map(Scheme::to_string).collect::<Vec<_>>().join(","));
        m.insert("J_over_g", sig(self.j_over_g));
        m.insert(
            "Delta_over_g",
            self.delta_over_g.map(sig).unwrap_or_else(|| "auto (0 resonant, 1 dispersive)".into()),
        );
        m.insert(
            "Omega_over_g",
            match &self.omega_over_g {
                Some(d) => d.iter().map(|&x| sig(x)).collect::<Vec<_>>().join(","),
                None => "auto (0.05 resonant, 0.02 dispersive)".into(),
            },
        );
        m.insert("kappa_over_g", sig(self.kappa_over_g));
        m.insert("gamma_over_g", sig(self.gamma_over_g));
        m.insert(
            "pulse",
            match self.pulse {
                Some(PulseShape::Adiabatic) => "adiabatic".into(),
                Some(PulseShape::Constant) => "constant".into(),
                None => "auto (adiabatic resonant, constant dispersive)".into(),
            },
        );
        m.insert("fock_cap", self.fock_cap.to_string());
        m.insert("sector_cap", self.sector_cap.map_or("none".into(), |c| c.to_string()));
        m.insert("dt_over_invg", sig(self.dt_over_invg));
        m.insert("samples", self.samples.to_string());
        if let Some(s) = &self.sweep {
            m.insert("sweep_param", s.param.key().to_string());
            m.insert("sweep_from", sig(s.from));
            m.insert("sweep_to", sig(s.to));
            m.insert("sweep_points", s.points.to_string());
        }
        m.insert("output", self.output.as_ref().map_or("-".into(), |p| p.display().to_string()));
        m.insert("format", if self.format == Format::Csv { "csv" } else { "json" }.into());
        m.insert("preset", self.preset.clone().unwrap_or_else(|| "none".into()));
        m.insert("timing", self.timing.to_string());
        m
    }

    fn header(&self) -> String {
        let mut h = format!("# fredkin-cqed {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in self.resolved() {
            let _ = writeln!(h, "# {k} = {v}");
        }
        h
    }
}

/// `x` with 12 significant digits, trailing zeros trimmed.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

/// One line of a fidelity or sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityRow {
    pub param: Option<f64>,
    pub scheme: Scheme,
    pub drive: f64,
    pub fidelity: Option<f64>,
    pub leakage: Option<f64>,
    pub trace_drift: Option<f64>,
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

impl FidelityRow {
    pub const CSV_HEADER: &'static str = "param,scheme,drive,fidelity,leakage,trace_drift,seconds,error";

    fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(sig).unwrap_or_default();
        let error = self.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        format!(
            "{},{},{},{},{},{},{},{}",
            opt(self.param),
            self.scheme,
            sig(self.drive),
            opt(self.fidelity),
            opt(self.leakage),
            opt(self.trace_drift),
            opt(self.seconds),
            error
        )
    }
}

/// Populations of the eight qubit states (cavities in vacuum) for one
/// initial qubit state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationRun {
    pub initial: usize,
    pub times: Vec<f64>,
    /// `populations[k][s]`: qubit state `k` at sample `s`.
    pub populations: Vec<Vec<f64>>,
}

impl PopulationRun {
    pub fn final_population(&self, q: usize) -> f64 {
        *self.populations[q].last().unwrap()
    }

    fn csv(&self) -> String {
        let mut s = String::from("t_in_invg");
        for k in 0..QUBIT_DIM {
            let _ = write!(s, ",p_q{k}");
        }
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&sig(*t));
            for col in &self.populations {
                s.push(',');
                s.push_str(&sig(col[i]));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: BTreeMap<&'static str, String>,
    pub task: Task,
    pub rows: Vec<FidelityRow>,
    pub populations: Vec<PopulationRun>,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    /// CSV body of a fidelity or sweep run (with provenance header).
    pub fn table_csv(&self, header: &str) -> String {
        let mut s = header.to_string();
        s.push_str(FidelityRow::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    }
}

fn timed<T>(enabled: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = Instant::now();
    let out = f();
    (out, enabled.then(|| start.elapsed().as_secs_f64()))
}

fn fidelity_row(cfg: &ExperimentConfig, scheme: Scheme, drive: f64, param: Option<f64>, decay: DecayParams) -> FidelityRow {
    let (result, seconds) = timed(cfg.timing, || -> Result<_> {
        let gate = cfg.gate(scheme, drive)?.with_decay(decay);
        let channel = reconstruct_channel(&gate)?;
        let f = average_gate_fidelity(&channel, &fredkin_ideal())?;
        Ok((f, channel.leakage, channel.trace_drift))
    });
    let mut row = FidelityRow {
        param,
        scheme,
        drive,
        fidelity: None,
        leakage: None,
        trace_drift: None,
        seconds,
        error: None,
    };
    match result {
        Ok((f, leak, drift)) => {
            row.fidelity = Some(f);
            row.leakage = Some(leak);
            row.trace_drift = Some(drift);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Fidelity at every (scheme, drive) of the configuration. Failures are
/// kept in-row.
pub fn fidelity_table(cfg: &ExperimentConfig) -> Vec<FidelityRow> {
    let jobs: Vec<(Scheme, f64)> = cfg.schemes.iter().flat_map(|&s| cfg.drives(s).into_iter().map(move |d| (s, d))).collect();
    jobs.par_iter()
        .map(|&(s, d)| fidelity_row(cfg, s, d, None, cfg.decay()))
        .collect()
}

/// One fidelity per grid point, scheme and drive, ordered by parameter.
/// Sweeping `Omega_over_g` replaces the drive list.
pub fn sweep(cfg: &ExperimentConfig, spec: &SweepSpec) -> Vec<FidelityRow> {
    let mut jobs = Vec::new();
    for x in spec.grid() {
        for &scheme in &cfg.schemes {
            let drives = if spec.param == SweepParam::Omega { vec![x] } else { cfg.drives(scheme) };
            for drive in drives {
                let mut decay = cfg.decay();
                match spec.param {
                    SweepParam::Omega => {}
                    SweepParam::Kappa => decay.kappa = x,
                    SweepParam::Gamma => decay.gamma = x,
                    SweepParam::KappaGamma => {
                        decay.kappa = x;
                        decay.gamma = x;
                    }
                }
                jobs.push((x, scheme, drive, decay));
            }
        }
    }
    jobs.par_iter()
        .map(|&(x, scheme, drive, decay)| fidelity_row(cfg, scheme, drive, Some(x), decay))
        .collect()
}

/// Population trajectories from each of the eight qubit basis states.
pub fn population_runs(cfg: &ExperimentConfig) -> Result<Vec<PopulationRun>> {
    let scheme = cfg.schemes[0];
    let gate = cfg.gate(scheme, cfg.drives(scheme)[0])?;
    let schedule = gate.schedule()?;
    let space = build_space(gate.fock_cap, gate.sector_cap)?;
    let h = driven_hamiltonian(&space, &gate.params, &schedule);
    let opts = gate.evolve.with_samples(cfg.samples);
    let targets = (0..QUBIT_DIM).map(BasisLabel::from_qubit).collect::<Result<Vec<_>>>()?;
    (0..QUBIT_DIM)
        .into_par_iter()
        .map(|q| {
            let psi = qubit_embedding(&space, q)?;
            let table: PopulationTable = if gate.decay.is_zero() {
                population_series(&evolve_state(&h, &psi, schedule.gate_time, &opts)?, &targets)?
            } else {
                let rho = &psi * psi.adjoint();
                population_series(&evolve_density(&h, &gate.decay, &rho, schedule.gate_time, &opts)?, &targets)?
            };
            Ok(PopulationRun {
                initial: q,
                times: table.times,
                populations: table.columns,
            })
        })
        .collect()
}

/// Runs the configured task and writes its outputs. With no `output` path
/// nothing is written and the data is only returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut summary = RunSummary {
        config: cfg.resolved(),
        task: cfg.task,
        rows: Vec::new(),
        populations: Vec::new(),
        files: Vec::new(),
    };
    match cfg.task {
        Task::Populations => summary.populations = population_runs(cfg)?,
        Task::Fidelity => summary.rows = fidelity_table(cfg),
        Task::Sweep => summary.rows = sweep(cfg, cfg.sweep.as_ref().expect("validated")),
    }
    if let Some(path) = &cfg.output {
        summary.files = write_outputs(cfg, &summary, path)?;
    }
    Ok(summary)
}

fn with_suffix(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn write_outputs(cfg: &ExperimentConfig, summary: &RunSummary, path: &Path) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let header = cfg.header();
    let mut files = Vec::new();
    match cfg.format {
        Format::Json => {
            let target = with_suffix(path, "", "json");
            fs::write(&target, serde_json::to_string_pretty(summary)? + "\n")?;
            files.push(target);
        }
        Format::Csv if cfg.task == Task::Populations => {
            for run in &summary.populations {
                let target = with_suffix(path, &format!("_q{}", run.initial), "csv");
                let label = BasisLabel::from_qubit(run.initial)?;
                fs::write(&target, format!("{header}# initial = {label}\n{}", run.csv()))?;
                files.push(target);
            }
        }
        Format::Csv => {
            let target = with_suffix(path, "", "csv");
            fs::write(&target, summary.table_csv(&header))?;
            files.push(target);
        }
    }
    Ok(files)
}

impl fmt::Display for FidelityRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.fidelity, &self.error) {
            (Some(fid), _) => write!(
                f,
                "{:<10} drive {:<8} F = {:.6}  leakage {:.3e}  trace drift {:.1e}",
                self.scheme.to_string(),
                sig(self.drive),
                fid,
                self.leakage.unwrap_or(0.0),
                self.trace_drift.unwrap_or(0.0)
            ),
            (None, Some(e)) => write!(f, "{:<10} drive {:<8} failed: {e}", self.scheme.to_string(), sig(self.drive)),
            (None, None) => write!(f, "{:<10} drive {:<8} (no result)", self.scheme.to_string(), sig(self.drive)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, String)> {
        parse_pairs(text).unwrap()
    }

    #[test]
    fn sig_formats_twelve_digits() {
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(0.1 + 0.2), "0.3");
        assert_eq!(sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig(76.95298629), "76.95298629");
        assert_eq!(sig(7853.981633974483), "7853.98163397");
        assert_eq!(sig(1.6e-7), "1.6e-7");
        assert_eq!(sig(-2.5), "-2.5");
    }

    #[test]
    fn parses_keys_comments_and_lists() {
        let cfg = ExperimentConfig::from_pairs(&pairs(
            "# decay sweep at three drives\ntask = sweep\nscheme = both\nOmega_over_g = 0.02, 0.05,0.1\n\
             sweep_param = kappa_gamma_over_g\nsweep_from = 0\nsweep_to = 0.01\nsweep_points = 3\n",
        ))
        .unwrap();
        assert_eq!(cfg.schemes, vec![Scheme::Resonant, Scheme::Dispersive]);
        assert_eq!(cfg.omega_over_g, Some(vec![0.02, 0.05, 0.1]));
        assert_eq!(cfg.sweep.as_ref().unwrap().grid(), vec![0.0, 0.005, 0.01]);
    }

    #[test]
    fn errors_name_the_field() {
        let field = |text: &str| match ExperimentConfig::from_pairs(&pairs(text)) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(field("kappa_over_g = -0.1"), "kappa_over_g");
        assert_eq!(field("colour = blue"), "colour");
        assert_eq!(field("J_over_g = fast"), "J_over_g");
        assert_eq!(field("task = sweep\nsweep_param = Omega_over_g\nsweep_from = 0.1\nsweep_to = 0.02\nsweep_points = 3"), "sweep_to");
        assert_eq!(field("task = sweep"), "sweep_param");
        assert_eq!(field("scheme = dispersive\npulse = adiabatic"), "pulse");
        assert_eq!(field("task = populations\nscheme = both"), "scheme");
    }

    #[test]
    fn preset_sets_rates_and_explicit_keys_win() {
        let cfg = ExperimentConfig::from_pairs(&pairs("kappa_over_g = 0.5\npreset = toroidal")).unwrap();
        assert_eq!(cfg.kappa_over_g, 0.5);
        assert!((cfg.gamma_over_g - 2.62 / 750.0).abs() < 1e-15);
        assert_eq!(cfg.preset.as_deref(), Some("toroidal"));
    }

    #[test]
    fn gate_defaults_follow_scheme() {
        let cfg = ExperimentConfig::default();
        let r = cfg.gate(Scheme::Resonant, 0.05).unwrap();
        let d = cfg.gate(Scheme::Dispersive, 0.02).unwrap();
        assert_eq!((r.params.delta, r.pulse), (0.0, PulseShape::Adiabatic));
        assert_eq!((d.params.delta, d.pulse), (1.0, PulseShape::Constant));
    }

    #[test]
    fn header_lists_every_resolved_key() {
        let h = ExperimentConfig::default().header();
        for key in ["scheme", "J_over_g", "Omega_over_g", "kappa_over_g", "dt_over_invg", "timing"] {
            assert!(h.contains(&format!("# {key} = ")), "{key} missing from header");
        }
    }

    #[test]
    fn failures_stay_in_row() {
        let mut cfg = ExperimentConfig::default();
        cfg.schemes = vec![Scheme::Dispersive];
        cfg.pulse = Some(PulseShape::Adiabatic);
        let row = fidelity_row(&cfg, Scheme::Dispersive, 0.02, Some(1.0), cfg.decay());
        assert!(row.fidelity.is_none());
        assert!(row.error.as_deref().unwrap().contains("pulse"));
        assert!(row.csv().starts_with("1,dispersive,0.02,,,,,"));
    }
}
