//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use bottlab::gaussian_measure::QuadratureSpec;
use bottlab::{SquareRoute, TestFunction, WeightRule};

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// 1-based line, `None` for command-line overrides and cross-key checks.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// How the mode weights are generated, and whether the constant mode is kept.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    pub rule: WeightRule,
    pub exclude_zero_mode: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThetaChoice {
    Position { mode: usize },
    Bump { mode: usize, width: f64, center: f64 },
    PositionMomentum { mode: usize, power: u32 },
    ScalarField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub length: f64,
    pub tau1: f64,
    pub sigma: f64,
    pub n: usize,
    pub nb: usize,
    pub tau2: f64,
    pub weight: WeightSpec,
    pub quad: QuadratureSpec,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub count: usize,
    pub point: Option<Vec<f64>>,
    pub omega: Option<Vec<f64>>,
    pub t_values: Vec<f64>,
    pub kernel_points: usize,
    pub spatial_modes: Vec<i64>,
    pub lambda: f64,
    pub symmetrize: bool,
    pub theta: ThetaChoice,
    pub connection: Option<PathBuf>,
    pub flow_velocity: Option<Vec<f64>>,
    pub flow_duration: Option<f64>,
    pub flow_start: Option<Vec<f64>>,
    pub steps: usize,
    pub test_function: TestFunction,
    pub n_from: usize,
    pub n_to: Option<usize>,
    pub route: SquareRoute,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 1,
            length: 2.0 * PI,
            tau1: 1.0,
            sigma: 1.0,
            n: 2,
            nb: 4,
            tau2: 1.0,
            weight: WeightSpec {
                rule: WeightRule::Massive { mass: 1.0 },
                exclude_zero_mode: false,
            },
            quad: QuadratureSpec::GaussHermite { order: 32 },
            seed: 0,
            out: None,
            format: None,
            count: 6,
            point: None,
            omega: None,
            t_values: vec![1.0, 0.5, 0.25, 0.125],
            kernel_points: 8,
            spatial_modes: vec![-1, 0, 1],
            lambda: 0.1,
            symmetrize: true,
            theta: ThetaChoice::Position { mode: 0 },
            connection: None,
            flow_velocity: None,
            flow_duration: None,
            flow_start: None,
            steps: 1000,
            test_function: TestFunction::Sine { t: 1.0, phase: 0.0 },
            n_from: 1,
            n_to: None,
            route: SquareRoute::MatrixSquare,
        }
    }
}

pub const KEYS: &[&str] = &[
    "d",
    "L",
    "tau1",
    "sigma",
    "n",
    "Nb",
    "tau2",
    "weight",
    "quad",
    "seed",
    "out",
    "format",
    "count",
    "point",
    "omega",
    "t_values",
    "kernel_points",
    "spatial_modes",
    "lambda",
    "symmetrize",
    "theta",
    "connection",
    "flow_velocity",
    "flow_duration",
    "flow_start",
    "steps",
    "test_function",
    "n_from",
    "n_to",
    "route",
];

fn num<T: std::str::FromStr>(v: &str, what: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("`{v}` is not {what}"))
}

fn positive(v: &str) -> Result<f64, String> {
    let x: f64 = num(v, "a number")?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be positive"))
    }
}

fn finite(v: &str) -> Result<f64, String> {
    let x: f64 = num(v, "a number")?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be finite"))
    }
}

fn list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let v = v.trim();
    if v.is_empty() {
        return Err("empty list".into());
    }
    v.split(',').map(|x| item(x.trim())).collect()
}

fn at_least(v: &str, min: usize) -> Result<usize, String> {
    let x: usize = num(v, "a non-negative integer")?;
    if x >= min {
        Ok(x)
    } else {
        Err(format!("{x} must be at least {min}"))
    }
}

pub fn parse_weight(v: &str) -> Result<WeightSpec, String> {
    let (kind, arg) = v
        .trim()
        .split_once(':')
        .ok_or_else(|| format!("`{v}` is not massive:<m>, photon:exclude, photon:<floor> or custom:<list>"))?;
    match kind.trim() {
        "massive" => {
            let mass: f64 = num(arg, "a mass")?;
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(format!("mass {mass} must be non-negative"));
            }
            Ok(WeightSpec {
                rule: WeightRule::Massive { mass },
                exclude_zero_mode: mass == 0.0,
            })
        }
        "photon" if arg.trim() == "exclude" => Ok(WeightSpec {
            rule: WeightRule::Photon { floor: None },
            exclude_zero_mode: true,
        }),
        "photon" => Ok(WeightSpec {
            rule: WeightRule::Photon { floor: Some(positive(arg)?) },
            exclude_zero_mode: false,
        }),
        "custom" => Ok(WeightSpec {
            rule: WeightRule::Custom(list(arg, positive)?),
            exclude_zero_mode: false,
        }),
        other => Err(format!("unknown weight rule `{other}`")),
    }
}

/// `const:c`, `poly:c0,c1,..`, `exp:t`, `sin:t[,phase]`, `bump:width[,center]`.
pub fn parse_test_function(v: &str) -> Result<TestFunction, String> {
    let (kind, arg) = v.trim().split_once(':').ok_or_else(|| format!("`{v}` has no `kind:` prefix"))?;
    let args = list(arg, finite)?;
    let f = match (kind.trim(), args.as_slice()) {
        ("const", [c]) => TestFunction::Constant(*c),
        ("poly", c) => TestFunction::polynomial(c.to_vec()).map_err(|e| e.to_string())?,
        ("exp", [t]) => TestFunction::Exponential { t: *t },
        ("sin", [t]) => TestFunction::Sine { t: *t, phase: 0.0 },
        ("sin", [t, phase]) => TestFunction::Sine { t: *t, phase: *phase },
        ("bump", [w]) => TestFunction::bump(*w, 0.0).map_err(|e| e.to_string())?,
        ("bump", [w, c]) => TestFunction::bump(*w, *c).map_err(|e| e.to_string())?,
        (k, _) => return Err(format!("unknown test function or wrong argument count in `{k}`")),
    };
    Ok(f)
}

pub fn parse_theta(v: &str) -> Result<ThetaChoice, String> {
    let v = v.trim();
    if v == "phi" {
        return Ok(ThetaChoice::ScalarField);
    }
    let (kind, arg) = v.split_once(':').ok_or_else(|| format!("`{v}` is not position:<mode>, xp:<mode>,<power>, bump:<mode>,<width>,<center> or phi"))?;
    match kind {
        "position" => Ok(ThetaChoice::Position { mode: num(arg, "a mode index")? }),
        "xp" => {
            let (mode, power) = arg.split_once(',').ok_or("xp theta takes mode,power")?;
            let power: u32 = num(power, "a power")?;
            if power == 0 {
                return Err("xp theta needs power >= 1".into());
            }
            Ok(ThetaChoice::PositionMomentum { mode: num(mode, "a mode index")?, power })
        }
        "bump" => {
            let parts: Vec<&str> = arg.split(',').collect();
            if parts.len() != 3 {
                return Err("bump theta takes mode,width,center".into());
            }
            Ok(ThetaChoice::Bump {
                mode: num(parts[0], "a mode index")?,
                width: positive(parts[1])?,
                center: finite(parts[2])?,
            })
        }
        other => Err(format!("unknown theta `{other}`")),
    }
}

impl ExperimentConfig {
    /// Assigns one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "d" => {
                let d = at_least(value, 1)?;
                if d > 6 {
                    return Err(format!("{d} exceeds 6"));
                }
                self.d = d;
            }
            "L" => self.length = positive(value)?,
            "tau1" => self.tau1 = positive(value)?,
            "sigma" => self.sigma = positive(value)?,
            "n" => self.n = at_least(value, 1)?,
            "Nb" => self.nb = at_least(value, 2)?,
            "tau2" => self.tau2 = positive(value)?,
            "weight" => self.weight = parse_weight(value)?,
            "quad" => {
                self.quad = value.trim().parse().map_err(|e: bottlab::Error| e.to_string())?;
            }
            "seed" => self.seed = num(value, "an unsigned integer")?,
            "out" => {
                if value.trim().is_empty() {
                    return Err("empty path".into());
                }
                self.out = Some(PathBuf::from(value.trim()));
            }
            "format" => {
                self.format = Some(match value.trim() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(format!("`{other}` is not csv or json")),
                })
            }
            "count" => self.count = at_least(value, 1)?,
            "point" => self.point = Some(list(value, finite)?),
            "omega" => self.omega = Some(list(value, finite)?),
            "t_values" => self.t_values = list(value, positive)?,
            "kernel_points" => self.kernel_points = at_least(value, 1)?,
            "spatial_modes" => self.spatial_modes = list(value, |x| num(x, "an integer"))?,
            "lambda" => self.lambda = finite(value)?,
            "symmetrize" => {
                self.symmetrize = match value.trim() {
                    "true" => true,
                    "false" => false,
                    other => return Err(format!("`{other}` is not true or false")),
                }
            }
            "theta" => self.theta = parse_theta(value)?,
            "connection" => self.connection = Some(PathBuf::from(value.trim())),
            "flow_velocity" => self.flow_velocity = Some(list(value, finite)?),
            "flow_duration" => self.flow_duration = Some(finite(value)?),
            "flow_start" => self.flow_start = Some(list(value, finite)?),
            "steps" => self.steps = at_least(value, 1)?,
            "test_function" => self.test_function = parse_test_function(value)?,
            "n_from" => self.n_from = at_least(value, 1)?,
            "n_to" => self.n_to = Some(at_least(value, 1)?),
            "route" => self.route = value.trim().parse().map_err(|e: bottlab::Error| e.to_string())?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Constraints spanning several keys.
    pub fn cross_check(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        let mut push = |key: &str, message: String| {
            errs.push(ConfigError {
                line: None,
                key: key.into(),
                message,
            })
        };
        let d = self.d;
        for (key, v) in [("point", &self.point), ("flow_velocity", &self.flow_velocity), ("flow_start", &self.flow_start)] {
            if let Some(v) = v {
                if v.len() != d {
                    push(key, format!("has {} components, d = {d}", v.len()));
                }
            }
        }
        if let Some(w) = &self.omega {
            if w.len() != self.n {
                push("omega", format!("has {} coefficients, n = {}", w.len(), self.n));
            }
        }
        if let Some(n_to) = self.n_to {
            if n_to < self.n_from {
                push("n_to", format!("{n_to} is below n_from = {}", self.n_from));
            }
        }
        if let WeightRule::Custom(w) = &self.weight.rule {
            let need = self.n_to.map_or(self.n, |t| self.n.max(t + 1));
            if w.len() < need {
                push("weight", format!("{} custom weights for {need} modes", w.len()));
            }
        }
        match self.theta {
            ThetaChoice::Position { mode } | ThetaChoice::PositionMomentum { mode, .. } | ThetaChoice::Bump { mode, .. }
                if mode >= self.n =>
            {
                push("theta", format!("mode {mode} out of range for n = {}", self.n));
            }
            _ => {}
        }
        errs
    }

    pub fn point_or_default(&self) -> Vec<f64> {
        self.point.clone().unwrap_or_else(|| vec![0.0; self.d])
    }
}

/// Parses the whole text, collecting every error instead of stopping at the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut cfg = ExperimentConfig::default();
    let mut errs = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errs.push(ConfigError {
                line: Some(line),
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
            continue;
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            errs.push(ConfigError {
                line: Some(line),
                key: key.into(),
                message: "unknown key".into(),
            });
            continue;
        }
        if let Some(first) = seen.get(key) {
            errs.push(ConfigError {
                line: Some(line),
                key: key.into(),
                message: format!("duplicate key, first set on line {first} and again on line {line}"),
            });
            continue;
        }
        seen.insert(key.to_string(), line);
        if let Err(message) = cfg.set(key, value) {
            errs.push(ConfigError {
                line: Some(line),
                key: key.into(),
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
