use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fredkin_cqed::experiment::{self, parse_pairs, ExperimentConfig, Task};
use fredkin_cqed::hilbert::BasisLabel;
use fredkin_cqed::Error;

#[derive(Parser)]
#[command(name = "fredkin", version, about = "Cavity-QED Fredkin gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Population dynamics from each of the eight qubit basis states.
    Populations(Keys),
    /// Average gate fidelity for each configured scheme and drive.
    Fidelity(Keys),
    /// Fidelity over a one-parameter grid.
    Sweep(Keys),
    /// List the experimental parameter presets.
    Presets,
}

/// Every flag mirrors the configuration key of the same name and overrides
/// the value from `--config`.
#[derive(Args)]
#[allow(non_snake_case)]
struct Keys {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "scheme", allow_hyphen_values = true)]
    scheme: Option<String>,
    #[arg(long = "J_over_g", allow_hyphen_values = true)]
    J_over_g: Option<String>,
    #[arg(long = "Delta_over_g", allow_hyphen_values = true)]
    Delta_over_g: Option<String>,
    /// One drive or a comma-separated list.
    #[arg(long = "Omega_over_g", allow_hyphen_values = true)]
    Omega_over_g: Option<String>,
    #[arg(long = "kappa_over_g", allow_hyphen_values = true)]
    kappa_over_g: Option<String>,
    #[arg(long = "gamma_over_g", allow_hyphen_values = true)]
    gamma_over_g: Option<String>,
    #[arg(long = "pulse", allow_hyphen_values = true)]
    pulse: Option<String>,
    #[arg(long = "fock_cap", allow_hyphen_values = true)]
    fock_cap: Option<String>,
    #[arg(long = "sector_cap", allow_hyphen_values = true)]
    sector_cap: Option<String>,
    #[arg(long = "dt_over_invg", allow_hyphen_values = true)]
    dt_over_invg: Option<String>,
    #[arg(long = "samples", allow_hyphen_values = true)]
    samples: Option<String>,
    #[arg(long = "sweep_param", allow_hyphen_values = true)]
    sweep_param: Option<String>,
    #[arg(long = "sweep_from", allow_hyphen_values = true)]
    sweep_from: Option<String>,
    #[arg(long = "sweep_to", allow_hyphen_values = true)]
    sweep_to: Option<String>,
    #[arg(long = "sweep_points", allow_hyphen_values = true)]
    sweep_points: Option<String>,
    #[arg(long = "output", allow_hyphen_values = true)]
    output: Option<String>,
    #[arg(long = "format", allow_hyphen_values = true)]
    format: Option<String>,
    #[arg(long = "preset", allow_hyphen_values = true)]
    preset: Option<String>,
    #[arg(long = "timing", allow_hyphen_values = true)]
    timing: Option<String>,
}

impl Keys {
    fn pairs(&self, task: &str) -> Result<Vec<(String, String)>, Error> {
        let mut out = match &self.config {
            Some(path) => parse_pairs(&std::fs::read_to_string(path)?)?,
            None => Vec::new(),
        };
        out.retain(|(k, _)| k != "task");
        out.push(("task".into(), task.into()));
        let flags = [
            ("scheme", &self.scheme),
            ("J_over_g", &self.J_over_g),
            ("Delta_over_g", &self.Delta_over_g),
            ("Omega_over_g", &self.Omega_over_g),
            ("kappa_over_g", &self.kappa_over_g),
            ("gamma_over_g", &self.gamma_over_g),
            ("pulse", &self.pulse),
            ("fock_cap", &self.fock_cap),
            ("sector_cap", &self.sector_cap),
            ("dt_over_invg", &self.dt_over_invg),
            ("samples", &self.samples),
            ("sweep_param", &self.sweep_param),
            ("sweep_from", &self.sweep_from),
            ("sweep_to", &self.sweep_to),
            ("sweep_points", &self.sweep_points),
            ("output", &self.output),
            ("format", &self.format),
            ("preset", &self.preset),
            ("timing", &self.timing),
        ];
        out.extend(flags.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))));
        Ok(out)
    }
}

fn run(keys: &Keys, task: &str) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_pairs(&keys.pairs(task)?)?;
    let summary = experiment::run_experiment(&cfg)?;
    for file in &summary.files {
        eprintln!("wrote {}", file.display());
    }
    match cfg.task {
        Task::Populations => {
            for run in &summary.populations {
                let label = BasisLabel::from_qubit(run.initial)?;
                let finals: Vec<String> = (0..8).map(|q| format!("{:.4}", run.final_population(q))).collect();
                println!("{label}  final populations q0..q7: {}", finals.join(" "));
            }
        }
        Task::Fidelity | Task::Sweep if cfg.output.is_none() => {
            print!("{}", summary.table_csv(""));
        }
        Task::Fidelity | Task::Sweep => {
            for row in &summary.rows {
                println!("{row}");
            }
        }
    }
    if summary.rows.iter().any(|r| r.error.is_some()) {
        return Err(Error::Config {
            field: "run".into(),
            message: "one or more points failed; see the error column".into(),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Populations(k) => run(k, "populations"),
        Command::Fidelity(k) => run(k, "fidelity"),
        Command::Sweep(k) => run(k, "sweep"),
        Command::Presets => {
            println!("{:<12} {:>14} {:>14}  description", "name", "kappa_over_g", "gamma_over_g");
            for p in experiment::presets() {
                println!("{:<12} {:>14.6e} {:>14.6e}  {}", p.name, p.kappa_over_g, p.gamma_over_g, p.description);
            }
            println!("default drives: Omega_over_g = 0.05 (resonant), 0.02 (dispersive)");
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config { field, message }) => {
            eprintln!("error: field={field}: {message}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
