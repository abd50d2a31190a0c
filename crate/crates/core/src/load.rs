//! Symbolic description of the distributed load `p(x)` on `[0, L]`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{MelanError, Result};
use crate::quadrature::interpolate;

/// Largest `|rate| * L` accepted for a hyperbolic-sine term.
pub const MAX_SINH_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LoadTerm {
    /// `value`
    Constant { value: f64 },
    /// `c0 + c1 * x`
    Affine { c0: f64, c1: f64 },
    /// `amplitude * sin(pi x / L)`
    SineHalfWave { amplitude: f64 },
    /// `c3 * x^3`
    Cubic { c3: f64 },
    /// `coef * sinh(rate * x)`
    SinhTerm { coef: f64, rate: f64 },
    /// Samples on a uniform grid covering `[0, L]`, interpolated locally
    /// with cubics between nodes.
    Sampled { values: Vec<f64> },
}

impl LoadTerm {
    pub fn eval(&self, x: f64, l: f64) -> f64 {
        match self {
            LoadTerm::Constant { value } => *value,
            LoadTerm::Affine { c0, c1 } => c0 + c1 * x,
            LoadTerm::SineHalfWave { amplitude } => amplitude * (PI * x / l).sin(),
            LoadTerm::Cubic { c3 } => c3 * x * x * x,
            LoadTerm::SinhTerm { coef, rate } => coef * (rate * x).sinh(),
            LoadTerm::Sampled { values } => interpolate(values, l, x),
        }
    }

    fn validate(&self, l: f64) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(MelanError::InvalidLoad(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            LoadTerm::Constant { value } => finite("value", *value),
            LoadTerm::Affine { c0, c1 } => finite("c0", *c0).and(finite("c1", *c1)),
            LoadTerm::SineHalfWave { amplitude } => finite("amplitude", *amplitude),
            LoadTerm::Cubic { c3 } => finite("c3", *c3),
            LoadTerm::SinhTerm { coef, rate } => {
                finite("coef", *coef)?;
                finite("rate", *rate)?;
                if rate.abs() * l > MAX_SINH_EXPONENT {
                    return Err(MelanError::InvalidLoad(format!(
                        "|rate| * L = {} exceeds {MAX_SINH_EXPONENT}",
                        rate.abs() * l
                    )));
                }
                Ok(())
            }
            LoadTerm::Sampled { values } => {
                if values.len() < 3 {
                    return Err(MelanError::InvalidLoad(format!(
                        "sampled load needs at least 3 values, got {}",
                        values.len()
                    )));
                }
                match values.iter().position(|v| !v.is_finite()) {
                    Some(i) => Err(MelanError::InvalidLoad(format!("sample {i} is not finite"))),
                    None => Ok(()),
                }
            }
        }
    }
}

/// Sum of load terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LoadTerm>", into = "Vec<LoadTerm>")]
pub struct LoadSpec {
    terms: Vec<LoadTerm>,
}

impl LoadSpec {
    pub fn new(terms: Vec<LoadTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(MelanError::InvalidLoad("a load needs at least one term".into()));
        }
        Ok(Self { terms })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self { terms: vec![LoadTerm::Constant { value }] }
    }

    pub fn single(term: LoadTerm) -> Self {
        Self { terms: vec![term] }
    }

    pub fn terms(&self) -> &[LoadTerm] {
        &self.terms
    }

    pub fn push(&mut self, term: LoadTerm) {
        self.terms.push(term);
    }

    /// Every term multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                LoadTerm::Constant { value } => LoadTerm::Constant { value: value * factor },
                LoadTerm::Affine { c0, c1 } => LoadTerm::Affine { c0: c0 * factor, c1: c1 * factor },
                LoadTerm::SineHalfWave { amplitude } => {
                    LoadTerm::SineHalfWave { amplitude: amplitude * factor }
                }
                LoadTerm::Cubic { c3 } => LoadTerm::Cubic { c3: c3 * factor },
                LoadTerm::SinhTerm { coef, rate } => LoadTerm::SinhTerm { coef: coef * factor, rate: *rate },
                LoadTerm::Sampled { values } => {
                    LoadTerm::Sampled { values: values.iter().map(|v| v * factor).collect() }
                }
            })
            .collect();
        Self { terms }
    }

    pub fn validate(&self, l: f64) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.validate(l))
    }

    pub fn eval(&self, x: f64, l: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x, l)).sum()
    }

    pub fn sample(&self, nodes: &[f64], l: f64) -> Vec<f64> {
        nodes.iter().map(|&x| self.eval(x, l)).collect()
    }

    pub fn is_sampled_only(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, LoadTerm::Sampled { .. }))
    }
}

impl TryFrom<Vec<LoadTerm>> for LoadSpec {
    type Error = MelanError;

    fn try_from(terms: Vec<LoadTerm>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<LoadSpec> for Vec<LoadTerm> {
    fn from(spec: LoadSpec) -> Self {
        spec.terms
    }
}
