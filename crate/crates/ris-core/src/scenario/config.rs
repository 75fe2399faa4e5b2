//! JSON scenario configuration. Unknown keys are rejected everywhere.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Operator, C64};
use crate::sim::{affine, constant, tabulated, Sampler};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    QubitRw,
    QubitFd,
    Custom,
}

/// A real schedule `s ↦ value` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant(f64),
    Affine { a: f64, b: f64 },
    Tabulated { s: Vec<f64>, values: Vec<f64> },
    /// CSV file with header `s,value`, relative to the config file.
    TabulatedFile(PathBuf),
}

impl ScheduleSpec {
    pub fn sampler(&self, base: &Path) -> Result<Sampler<f64>> {
        match self {
            ScheduleSpec::Constant(c) => Ok(constant(*c)),
            ScheduleSpec::Affine { a, b } => Ok(affine(*a, *b)),
            ScheduleSpec::Tabulated { s, values } => tabulated(s.clone(), values.clone()),
            ScheduleSpec::TabulatedFile(path) => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Knot {
                    s: f64,
                    value: f64,
                }
                let mut reader = csv::Reader::from_path(base.join(path))?;
                let (mut s, mut values) = (Vec::new(), Vec::new());
                for knot in reader.deserialize::<Knot>() {
                    let knot = knot?;
                    s.push(knot.s);
                    values.push(knot.value);
                }
                tabulated(s, values)
            }
        }
    }
}

/// Repetition count per probe configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MSpec {
    Fixed(usize),
    /// Smallest admissible `m` for the contraction target `1 - G`.
    Auto(f64),
}

pub const DEFAULT_GAP: f64 = 0.5;

impl MSpec {
    fn parse(text: &str) -> std::result::Result<Self, String> {
        let t = text.trim();
        if t == "auto" {
            return Ok(MSpec::Auto(DEFAULT_GAP));
        }
        if let Some(inner) = t.strip_prefix("auto(").and_then(|r| r.strip_suffix(')')) {
            return inner
                .trim()
                .parse::<f64>()
                .map(MSpec::Auto)
                .map_err(|e| format!("bad gap in {text:?}: {e}"));
        }
        Err(format!("expected a positive integer, \"auto\" or \"auto(G)\", got {text:?}"))
    }
}

impl fmt::Display for MSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MSpec::Fixed(m) => write!(f, "{m}"),
            MSpec::Auto(g) => write!(f, "auto({g})"),
        }
    }
}

impl Serialize for MSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MSpec::Fixed(m) => s.serialize_u64(*m as u64),
            MSpec::Auto(_) => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for MSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(m) => Ok(MSpec::Fixed(m as usize)),
            Raw::Text(t) => MSpec::parse(&t).map_err(de::Error::custom),
        }
    }
}

impl Default for MSpec {
    fn default() -> Self {
        MSpec::Fixed(1)
    }
}

/// Matrix entry: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

/// Row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixSpec(pub Vec<Vec<Entry>>);

impl MatrixSpec {
    pub fn to_operator(&self) -> Result<Operator> {
        let n = self.0.len();
        if n == 0 || self.0.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("matrices must be square and nonempty".into()));
        }
        Ok(Operator::from_fn(n, n, |i, j| match self.0[i][j] {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Invariant state of the channel at `s = 0`.
    #[default]
    Invariant,
    /// Gibbs state of the system Hamiltonian at the given inverse temperature.
    Gibbs(f64),
    Explicit(MatrixSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub d_sys: usize,
    pub d_env: usize,
    #[serde(rename = "h_S")]
    pub h_s: MatrixSpec,
    #[serde(rename = "h_E")]
    pub h_e: MatrixSpec,
    pub v: MatrixSpec,
}

fn default_u1() -> f64 {
    1.0
}

fn default_beta() -> ScheduleSpec {
    ScheduleSpec::Constant(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    #[serde(rename = "E", default)]
    pub e: Option<f64>,
    #[serde(rename = "E0", default)]
    pub e0: Option<f64>,
    /// Probe level as a function of `s`; overrides `E0` when present.
    #[serde(rename = "E0_schedule", default)]
    pub e0_schedule: Option<ScheduleSpec>,
    #[serde(default = "default_u1")]
    pub u1: f64,
    #[serde(default = "default_beta")]
    pub beta_schedule: ScheduleSpec,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_list: Option<Vec<f64>>,
    pub tau: f64,
    #[serde(rename = "T_list")]
    pub t_list: Vec<usize>,
    #[serde(default)]
    pub m: MSpec,
    #[serde(default)]
    pub rho_i: InitialState,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub custom: Option<CustomModel>,
    /// Directory relative file references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Coupling strengths to sweep, `lambda_list` taking precedence.
    pub fn lambdas(&self) -> Vec<f64> {
        match (&self.lambda_list, self.lambda) {
            (Some(list), _) => list.clone(),
            (None, Some(l)) => vec![l],
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.t_list.is_empty() || self.t_list.contains(&0) {
            return bad("T_list must be nonempty with positive entries".into());
        }
        let lambdas = self.lambdas();
        if lambdas.is_empty() {
            return bad("one of lambda or lambda_list is required".into());
        }
        if lambdas.iter().any(|l| !l.is_finite()) || !self.tau.is_finite() || self.tau < 0.0 {
            return bad("lambda must be finite and tau finite and nonnegative".into());
        }
        match self.m {
            MSpec::Fixed(0) => return bad("m must be at least 1".into()),
            MSpec::Auto(g) if !(g > 0.0 && g < 1.0) => return bad(format!("auto gap G = {g} must lie in (0, 1)")),
            _ => {}
        }
        match self.model {
            ModelKind::QubitRw | ModelKind::QubitFd => {
                if self.e.is_none() || (self.e0.is_none() && self.e0_schedule.is_none()) {
                    return bad("qubit models need E and E0 (or E0_schedule)".into());
                }
                if self.custom.is_some() {
                    return bad("custom block given for a built-in model".into());
                }
            }
            ModelKind::Custom => {
                let Some(c) = &self.custom else {
                    return bad("model custom needs a custom block".into());
                };
                if c.h_s.0.len() != c.d_sys || c.h_e.0.len() != c.d_env || c.v.0.len() != c.d_sys * c.d_env {
                    return bad("custom matrices do not match d_sys and d_env".into());
                }
                if self.e0_schedule.is_some() {
                    return bad("E0_schedule applies to qubit models only".into());
                }
            }
        }
        Ok(())
    }
}
