//! JSON run configuration.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use melan_core::{BridgeParams, LoadSpec, LoadTerm};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveLinear,
    Check,
    Iterate,
    BridgeReport,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SolveLinear => "solve-linear",
            Mode::Check => "check",
            Mode::Iterate => "iterate",
            Mode::BridgeReport => "bridge-report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemBlock {
    /// `y'''' - M y'' + N ∫y = p`.
    Linear { m: f64, n: f64, l: f64 },
    /// `w'''' - (a + b ∫w) w'' + c ∫w = p` with the sine upper solution
    /// `lambda sin(pi x / L)`.
    Melan { a: f64, b: f64, c: f64, l: f64, lambda: f64 },
    /// Physical bridge data; the load block is the live load in kN/m.
    Bridge(BridgeParams),
}

// Plain mirrors of the variants, used to locate the offending field: the
// tagged enum buffers its content and loses both path and position.
#[allow(dead_code)]
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearFields {
    kind: String,
    m: f64,
    n: f64,
    l: f64,
}

#[allow(dead_code)]
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MelanFields {
    kind: String,
    a: f64,
    b: f64,
    c: f64,
    l: f64,
    lambda: f64,
}

#[allow(dead_code)]
#[derive(Deserialize)]
struct BridgeFields {
    kind: String,
    #[serde(flatten)]
    params: BridgeParams,
}

#[allow(dead_code)]
#[derive(Deserialize)]
struct Probe<T> {
    problem: T,
}

type PathError = serde_path_to_error::Error<serde_json::Error>;

fn probe<T: serde::de::DeserializeOwned>(text: &str) -> Option<PathError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize::<_, Probe<T>>(de).err()
}

/// Re-reads the problem block through its mirror to get a precise error.
fn problem_error(text: &str) -> Option<PathError> {
    let root: serde_json::Value = serde_json::from_str(text).ok()?;
    let e = match root.get("problem")?.get("kind")?.as_str()? {
        "linear" => probe::<LinearFields>(text),
        "melan" => probe::<MelanFields>(text),
        "bridge" => probe::<BridgeFields>(text),
        _ => None,
    }?;
    (e.path().to_string() != "problem").then_some(e)
}

impl ProblemBlock {
    fn kind(&self) -> &'static str {
        match self {
            ProblemBlock::Linear { .. } => "linear",
            ProblemBlock::Melan { .. } => "melan",
            ProblemBlock::Bridge(_) => "bridge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Gap tolerance of the monotone iteration; `1e-8 max(1, lambda)` if absent.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub force: bool,
}

fn default_points() -> usize {
    melan_core::linear::DEFAULT_POINTS
}

fn default_max_iter() -> usize {
    100
}

impl Default for Numerics {
    fn default() -> Self {
        Self { grid_points: default_points(), max_iter: default_max_iter(), tol: None, force: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Directory receiving CSV and JSON artifacts, created if missing.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; when present it must agree with the mode on the command line.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub load: Vec<LoadTerm>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub force: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e: PathError| {
            let e = if e.path().to_string() == "problem" { problem_error(text).unwrap_or(e) } else { e };
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "line {} column {}, field `{path}`: {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn load_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.grid {
            self.numerics.grid_points = g;
        }
        if let Some(t) = o.tol {
            self.numerics.tol = Some(t);
        }
        if let Some(k) = o.max_iter {
            self.numerics.max_iter = k;
        }
        self.numerics.force |= o.force;
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
    }

    /// Checks that the problem block fits `mode`.
    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(CliError::Config(format!(
                    "field `mode`: config says {}, command line says {}",
                    m.name(),
                    mode.name()
                )));
            }
        }
        let ok = match (mode, &self.problem) {
            (Mode::SolveLinear, ProblemBlock::Linear { .. }) => true,
            (Mode::Iterate, ProblemBlock::Melan { .. }) => true,
            (Mode::BridgeReport, ProblemBlock::Bridge(_)) => true,
            (Mode::Check, _) => true,
            _ => false,
        };
        if !ok {
            return Err(CliError::Config(format!(
                "field `problem.kind`: {} does not fit mode {}",
                self.problem.kind(),
                mode.name()
            )));
        }
        if self.numerics.grid_points < 3 || self.numerics.grid_points % 2 == 0 {
            return Err(CliError::Config(format!(
                "field `numerics.grid_points`: need an odd count >= 3, got {}",
                self.numerics.grid_points
            )));
        }
        if let Some(t) = self.numerics.tol {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::Config(format!("field `numerics.tol`: {t} is not a valid tolerance")));
            }
        }
        Ok(())
    }

    /// The load block; an empty list is the zero load.
    pub fn load_spec(&self) -> Result<LoadSpec, CliError> {
        if self.load.is_empty() {
            return Ok(LoadSpec::zero());
        }
        LoadSpec::new(self.load.clone()).map_err(|e| CliError::Config(format!("field `load`: {e}")))
    }
}
