//! Reproducible command-line experiments over the `bottlab` numerics.
//!
//! A run is a pure function of a flat `key = value` configuration, optional
//! flag overrides and the subcommand. Exit codes: 0 success, 2 configuration
//! error, 3 convergence veto, 4 numerical failure.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand as ClapSubcommand};

pub use config::{parse_config, ConfigError, ConfigErrors, ExperimentConfig, Format};
pub use run::{run_experiment, write_atomic, Artifact, RunError, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bottlab", version, about = "Truncated Bott-Dirac and gauge-field experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of modes `n`.
    #[arg(long, global = true)]
    pub modes: Option<String>,
    /// Bosonic levels per mode `Nb`.
    #[arg(long = "boson-cutoff", global = true)]
    pub boson_cutoff: Option<String>,
    #[arg(long, global = true)]
    pub tau1: Option<String>,
    #[arg(long, global = true)]
    pub tau2: Option<String>,
    #[arg(long, global = true)]
    pub sigma: Option<String>,
    /// Shorthand for `weight = massive:<mass>`.
    #[arg(long, global = true)]
    pub mass: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// `gh:<order>` or `mc:<samples>`.
    #[arg(long, global = true)]
    pub quad: Option<String>,
    /// Output path; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// `csv` or `json`.
    #[arg(long, global = true)]
    pub format: Option<String>,
}

#[derive(Clone, Copy, Debug, ClapSubcommand)]
pub enum Command {
    /// Mode table as CSV.
    Basis,
    /// Lowest interior eigenvalues of the squared operator.
    Spectrum,
    /// Truncation increments of a ground-state expectation against their bound.
    Expectation,
    /// Ground-state overlap of translated configurations.
    Translate,
    /// Field commutator kernel on a grid.
    Kernel,
    /// Holonomy matrix along a flow.
    Holonomy,
    /// Normalized trace of the holonomy around a closed flow.
    Wilson,
    /// Spectrum of the fluctuated square.
    Fluctuate,
    /// Spectrum of the total operator with spatial modes.
    DiracTotal,
    /// Summability report for the mode weights.
    Convergence,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Basis => Subcommand::Basis,
            Command::Spectrum => Subcommand::Spectrum,
            Command::Expectation => Subcommand::Expectation,
            Command::Translate => Subcommand::Translate,
            Command::Kernel => Subcommand::Kernel,
            Command::Holonomy => Subcommand::Holonomy,
            Command::Wilson => Subcommand::Wilson,
            Command::Fluctuate => Subcommand::Fluctuate,
            Command::DiracTotal => Subcommand::DiracTotal,
            Command::Convergence => Subcommand::Convergence,
        }
    }
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let pairs = [
            ("n", &self.modes),
            ("Nb", &self.boson_cutoff),
            ("tau1", &self.tau1),
            ("tau2", &self.tau2),
            ("sigma", &self.sigma),
            ("seed", &self.seed),
            ("quad", &self.quad),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (k, val) in pairs {
            if let Some(x) = val {
                v.push((k, x.clone()));
            }
        }
        if let Some(m) = &self.mass {
            v.push(("weight", format!("massive:{m}")));
        }
        v
    }

    /// The configuration file (or defaults) with flag overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigErrors> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ConfigErrors(vec![ConfigError {
                        line: None,
                        key: "config".into(),
                        message: format!("{}: {e}", path.display()),
                    }])
                })?;
                parse_config(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let mut errs = Vec::new();
        for (key, value) in self.overrides() {
            if let Err(message) = cfg.set(key, &value) {
                errs.push(ConfigError {
                    line: None,
                    key: format!("--{key}"),
                    message,
                });
            }
        }
        if errs.is_empty() {
            errs = cfg.cross_check();
        }
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(errs))
        }
    }
}

/// Parses `args` (program name first), runs, writes the artifact and returns
/// the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let artifact = match run_experiment(&cfg, cli.command.into()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let written = match &cfg.out {
        Some(path) => write_atomic(path, &artifact.contents),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(artifact.contents.as_bytes())
        }
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("output: {e}");
            4
        }
    }
}
