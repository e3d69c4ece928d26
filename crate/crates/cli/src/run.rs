//! Subcommand execution. Every subcommand renders its artifact to a string
//! first, so output is a pure function of the configuration.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use bottlab::bott_dirac::{dirac_total, dirac_total_interior_mask, interior_spectrum, square_b, assemble_b, grading};
use bottlab::field_theory::{commutator_kernel, scalar_field};
use bottlab::fluctuations::{fluct_spectrum, FluctReport};
use bottlab::gaussian_measure::{tail_bound_check, translate_overlap, QuadratureSpec};
use bottlab::holonomy::{holonomy_along_flow, wilson_loop};
use bottlab::lie::unitarity_defect;
use bottlab::numfmt::sig17;
use bottlab::spectral_basis::{ConditionReport, ZeroMode};
use bottlab::{
    Connection, Error, FieldConfig, FlowSpec, FluctuationSpec, FockSpec, ModeBasis, OperatorMatrix, SobolevParams,
    SolverOptions, ThetaRecipe, TorusGeometry, VectorField,
};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, ThetaChoice};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Basis,
    Spectrum,
    Expectation,
    Translate,
    Kernel,
    Holonomy,
    Wilson,
    Fluctuate,
    DiracTotal,
    Convergence,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Basis => "basis",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Expectation => "expectation",
            Subcommand::Translate => "translate",
            Subcommand::Kernel => "kernel",
            Subcommand::Holonomy => "holonomy",
            Subcommand::Wilson => "wilson",
            Subcommand::Fluctuate => "fluctuate",
            Subcommand::DiracTotal => "dirac-total",
            Subcommand::Convergence => "convergence",
        }
    }

    pub fn format(self) -> Format {
        match self {
            Subcommand::Basis | Subcommand::Expectation | Subcommand::Translate | Subcommand::Kernel => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("run vetoed: {0}")]
    Veto(Error),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Veto(_) => 3,
            RunError::Numerical(_) | RunError::Io(_) => 4,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConvergenceVeto { .. } => RunError::Veto(e),
            Error::NotHermitian { .. } | Error::NoConvergence { .. } | Error::Quadrature(_) | Error::Internal(_) => {
                RunError::Numerical(e)
            }
            other => RunError::Config(other.to_string()),
        }
    }
}

/// A rendered output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub format: Format,
    pub contents: String,
}

fn basis_with(cfg: &ExperimentConfig, n: usize) -> Result<ModeBasis, RunError> {
    let zero = if cfg.weight.exclude_zero_mode { ZeroMode::Exclude } else { ZeroMode::Include };
    Ok(ModeBasis::build(
        TorusGeometry::new(cfg.d, cfg.length)?,
        SobolevParams::new(cfg.tau1, cfg.sigma)?,
        n,
        cfg.weight.rule.clone(),
        zero,
    )?)
}

fn fock_for(cfg: &ExperimentConfig, basis: &ModeBasis) -> Result<FockSpec, RunError> {
    Ok(FockSpec::new(cfg.n, cfg.nb, cfg.tau2, basis.weights()[..cfg.n].to_vec())?)
}

fn quad(cfg: &ExperimentConfig) -> QuadratureSpec {
    match cfg.quad {
        QuadratureSpec::MonteCarlo { samples, .. } => QuadratureSpec::MonteCarlo {
            samples,
            seed: Some(cfg.seed),
        },
        q => q,
    }
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        seed: cfg.seed,
        ..SolverOptions::default()
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn condition_json(c: &ConditionReport) -> Value {
    json!({
        "partial_sum": c.partial_sum,
        "tail_estimate": if c.tail_estimate.is_finite() { json!(c.tail_estimate) } else { json!("infinity") },
        "shell_exponent": c.shell_exponent,
        "converges": c.verdict.passes(),
    })
}

fn load_connection(cfg: &ExperimentConfig) -> Result<Connection, RunError> {
    let path = cfg
        .connection
        .as_ref()
        .ok_or_else(|| RunError::Config("`connection` must name a connection file".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let conn = Connection::parse(&text)?;
    let g = bottlab::GaugeField::geometry(&conn);
    if g.d() != cfg.d || g.length() != cfg.length {
        return Err(RunError::Config(format!(
            "connection lives on d = {}, L = {}, config has d = {}, L = {}",
            g.d(),
            g.length(),
            cfg.d,
            cfg.length
        )));
    }
    Ok(conn)
}

fn flow(cfg: &ExperimentConfig) -> Result<FlowSpec, RunError> {
    let g = TorusGeometry::new(cfg.d, cfg.length)?;
    let v = cfg.flow_velocity.clone().unwrap_or_else(|| {
        let mut v = vec![0.0; cfg.d];
        v[0] = 1.0;
        v
    });
    let start = cfg.flow_start.clone().unwrap_or_else(|| vec![0.0; cfg.d]);
    Ok(FlowSpec::new(VectorField::constant(g, &v)?, cfg.flow_duration.unwrap_or(cfg.length), start)?)
}

fn fluct_json(r: &FluctReport) -> Value {
    json!({
        "lambda": r.coupling,
        "eigenvalues": r.eigenvalues,
        "gap": r.gap,
        "hermiticity_defect": r.hermiticity_defect,
    })
}

/// Renders the artifact of `sub` for `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig, sub: Subcommand) -> Result<Artifact, RunError> {
    let format = sub.format();
    if let Some(f) = cfg.format {
        if f != format {
            return Err(RunError::Config(format!("`{}` writes {:?} only", sub.name(), format).to_lowercase()));
        }
    }
    let contents = match sub {
        Subcommand::Basis => basis_with(cfg, cfg.n)?.to_csv(),
        Subcommand::Convergence => {
            let r = basis_with(cfg, cfg.n)?.convergence_report();
            json_text(&json!({
                "modes": r.modes,
                "weight_exponent": r.weight_exponent,
                "sum_sinv_xi2": r.sum_sinv_xi2,
                "sum_xi2": r.sum_xi2,
                "condition16": condition_json(&r.condition16),
                "condition27": condition_json(&r.condition27),
            }))
        }
        Subcommand::Spectrum => {
            let basis = basis_with(cfg, cfg.n)?;
            let fock = fock_for(cfg, &basis)?;
            let op = square_b(&fock, cfg.route)?;
            let sp = interior_spectrum(&op, &fock.interior_mask(), cfg.count, &solver(cfg))?;
            json_text(&json!({
                "spec": {
                    "n": fock.n(),
                    "Nb": fock.nb(),
                    "tau2": fock.tau2(),
                    "s": fock.s(),
                    "route": match cfg.route {
                        bottlab::SquareRoute::MatrixSquare => "matrix_square",
                        bottlab::SquareRoute::Analytic => "analytic",
                    },
                },
                "eigenvalues": sp.eigenvalues(),
                "residuals": sp.residuals(),
            }))
        }
        Subcommand::Expectation => {
            let n_to = cfg.n_to.unwrap_or(cfg.n);
            let basis = basis_with(cfg, n_to + 1)?;
            let fock = FockSpec::new(1, cfg.nb, cfg.tau2, vec![basis.weights()[0]])?;
            let point = cfg.point_or_default();
            tail_bound_check(&basis, &fock, &cfg.test_function, &point, cfg.n_from, n_to, quad(cfg))?.to_csv()
        }
        Subcommand::Translate => {
            let basis = basis_with(cfg, cfg.n)?;
            if !basis.convergence_report().condition16.verdict.passes() {
                return Err(RunError::Veto(Error::ConvergenceVeto {
                    condition: "16",
                    d: cfg.d,
                    sigma: cfg.sigma,
                }));
            }
            let fock = fock_for(cfg, &basis)?;
            let omega = FieldConfig::new(cfg.omega.clone().unwrap_or_else(|| {
                let mut w = vec![0.0; cfg.n];
                w[0] = 1.0;
                w
            }));
            let mut s = String::from("t,overlap\n");
            for &t in &cfg.t_values {
                let _ = writeln!(s, "{},{}", sig17(t), sig17(translate_overlap(&fock, &omega, t)?));
            }
            s
        }
        Subcommand::Kernel => {
            let basis = basis_with(cfg, cfg.n)?;
            let fock = fock_for(cfg, &basis)?;
            let k = cfg.kernel_points;
            let at = |i: usize| {
                let mut p = vec![0.0; cfg.d];
                p[0] = cfg.length * i as f64 / k as f64;
                p
            };
            let mut s = String::from("m,mprime,re,im\n");
            for i in 0..k {
                for j in 0..k {
                    let c = commutator_kernel(&basis, &fock, &at(i), &at(j))?.matrix;
                    let _ = writeln!(s, "{},{},{},{}", sig17(at(i)[0]), sig17(at(j)[0]), sig17(c.re), sig17(c.im));
                }
            }
            s
        }
        Subcommand::Holonomy => {
            let conn = load_connection(cfg)?;
            let h = holonomy_along_flow(&conn, &flow(cfg)?, cfg.steps)?;
            let rows = |f: fn(&bottlab::C64) -> f64| -> Vec<Vec<f64>> {
                (0..h.nrows()).map(|i| (0..h.ncols()).map(|j| f(&h[(i, j)])).collect()).collect()
            };
            json_text(&json!({
                "real": rows(|c| c.re),
                "imag": rows(|c| c.im),
                "unitarity_defect": unitarity_defect(&h),
                "steps": cfg.steps,
            }))
        }
        Subcommand::Wilson => {
            let conn = load_connection(cfg)?;
            let w = wilson_loop(&conn, &flow(cfg)?, cfg.steps)?;
            json_text(&json!({ "re": w.re, "im": w.im, "steps": cfg.steps }))
        }
        Subcommand::Fluctuate => {
            let basis = basis_with(cfg, cfg.n)?;
            let fock = fock_for(cfg, &basis)?;
            let theta = match &cfg.theta {
                ThetaChoice::Position { mode } => ThetaRecipe::Position { mode: *mode },
                ThetaChoice::PositionMomentum { mode, power } => ThetaRecipe::PositionMomentum { mode: *mode, power: *power },
                ThetaChoice::Bump { mode, width, center } => ThetaRecipe::BoundedFunction {
                    mode: *mode,
                    f: bottlab::TestFunction::bump(*width, *center)?,
                },
                ThetaChoice::ScalarField => {
                    let (phi, _) = scalar_field(&basis, &fock, &cfg.point_or_default())?;
                    ThetaRecipe::from_field(&phi)?
                }
            };
            let spec = FluctuationSpec::new(theta, cfg.symmetrize, cfg.lambda)?;
            json_text(&fluct_json(&fluct_spectrum(&spec, &fock, cfg.count, &solver(cfg))?))
        }
        Subcommand::DiracTotal => {
            let basis = basis_with(cfg, cfg.n)?;
            let fock = fock_for(cfg, &basis)?;
            let m = cfg.spatial_modes.len();
            let dt = dirac_total(&fock, &cfg.spatial_modes)?;
            let b = OperatorMatrix::kron(&assemble_b(&fock)?, &OperatorMatrix::identity(m));
            let diag: Vec<f64> = cfg.spatial_modes.iter().map(|&k| k as f64).collect();
            let g = OperatorMatrix::kron(&grading(&fock)?, &OperatorMatrix::from_real_diagonal(&diag));
            let defect = b.anticommutator(&g)?.max_abs();
            let sq = dt.try_mul(&dt)?.with_symmetry(bottlab::Symmetry::Hermitian);
            let sp = interior_spectrum(&sq, &dirac_total_interior_mask(&fock, m), cfg.count, &solver(cfg))?;
            json_text(&json!({
                "spatial_modes": cfg.spatial_modes,
                "anticommutator_defect": defect,
                "eigenvalues": sp.eigenvalues(),
                "residuals": sp.residuals(),
            }))
        }
    };
    Ok(Artifact { format, contents })
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
