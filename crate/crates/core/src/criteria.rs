//! Scalar solvability conditions: the `σ` function behind the maximum
//! principle, the smallness and uniqueness inequalities, the contraction
//! constant of the monotone scheme and the sine-upper-solution conditions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{MelanError, Result};

/// Below this argument `σ` is summed from its (all-positive) Taylor series.
const SIGMA_SERIES_SWITCH: f64 = 2.0;

/// One inequality `lhs <= rhs` (or `lhs < rhs` when `strict`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// `(rhs - lhs) / max(|rhs|, tiny)`.
    pub margin: f64,
    pub strict: bool,
}

impl ConditionReport {
    pub fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::build(name, lhs, rhs, lhs <= rhs, false)
    }

    pub fn below(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::build(name, lhs, rhs, lhs < rhs, true)
    }

    fn build(name: &str, lhs: f64, rhs: f64, satisfied: bool, strict: bool) -> Self {
        let margin = (rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE);
        Self { name: name.to_string(), lhs, rhs, satisfied, margin, strict }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MelanError::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// `σ(x) = 3 x^3 / (6 x cosh x + 6 x - 12 sinh x - x^3)`.
///
/// The denominator is `Σ_{k>=2} 6 (2k - 1) x^{2k+1} / (2k + 1)!`, a series
/// of positive terms, which is what gets summed for small `x`; for large `x`
/// everything is rescaled by `e^{-x}`.
pub fn sigma(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(MelanError::Domain(format!("sigma needs x > 0, got {x}")));
    }
    if x < SIGMA_SERIES_SWITCH {
        // E(x) = D(x) / x^3 = Σ_{k>=2} 6 (2k-1) x^{2k-2} / (2k+1)!
        let x2 = x * x;
        let mut power = x2; // x^{2k-2}
        let mut fact = 120.0; // (2k+1)!
        let mut sum = 0.0;
        let mut k = 2.0_f64;
        loop {
            let term = 6.0 * (2.0 * k - 1.0) * power / fact;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            power *= x2;
            fact *= (2.0 * k + 2.0) * (2.0 * k + 3.0);
            k += 1.0;
        }
        Ok(3.0 / sum)
    } else if x <= 20.0 {
        let d = 6.0 * x * x.cosh() + 6.0 * x - 12.0 * x.sinh() - x * x * x;
        Ok(3.0 * x * x * x / d)
    } else {
        let e = (-x).exp();
        let d = 3.0 * x * (1.0 + e * e) + 6.0 * x * e - 6.0 * (1.0 - e * e) - x * x * x * e;
        Ok(3.0 * x * x * x * e / d)
    }
}

/// `ξ(w) = (w/2) sinh w - cosh w + 1 = Σ_{n>=2} (n - 1) w^{2n} / (2n)!`.
pub fn xi(w: f64) -> f64 {
    let w = w.abs();
    if w < 2.0 {
        let w2 = w * w;
        let mut power = w2 * w2;
        let mut fact = 24.0;
        let mut sum = 0.0;
        let mut n = 2.0_f64;
        loop {
            let term = (n - 1.0) * power / fact;
            sum += term;
            if term <= 1e-18 * sum {
                break;
            }
            power *= w2;
            fact *= (2.0 * n + 1.0) * (2.0 * n + 2.0);
            n += 1.0;
        }
        sum
    } else {
        0.5 * w * w.sinh() - w.cosh() + 1.0
    }
}

/// Maximum-principle condition `0 <= N <= (4M / L^3) σ(sqrt(M) L)`.
///
/// The right side is also evaluated in the equivalent form
/// `(4 / L^5) (sqrt(M) L)^2 σ(sqrt(M) L)` and the two must agree.
pub fn check_positivity(m: f64, n: f64, l: f64) -> Result<ConditionReport> {
    positive("M", m)?;
    positive("L", l)?;
    let w = m.sqrt() * l;
    let s = sigma(w)?;
    let rhs = 4.0 * m / (l * l * l) * s;
    let alt = 4.0 / l.powi(5) * w * w * s;
    if (rhs - alt).abs() > 1e-12 * rhs.abs() {
        return Err(MelanError::Domain(format!("positivity bound forms disagree: {rhs} vs {alt}")));
    }
    let mut report = ConditionReport::at_most("positivity", n, rhs);
    report.satisfied &= n >= 0.0;
    Ok(report)
}

/// `|N| <= 8M / L^3`.
pub fn check_smallness(m: f64, n: f64, l: f64) -> Result<ConditionReport> {
    positive("M", m)?;
    positive("L", l)?;
    Ok(ConditionReport::at_most("smallness", n.abs(), 8.0 * m / (l * l * l)))
}

/// Contraction constant of the monotone scheme,
/// `L tanh(mu L / 2) / (2 mu) [M - a - b ∫α + (L^3 / 4)(N - c + b max α'')]`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_rho(
    a: f64,
    b: f64,
    c: f64,
    m: f64,
    n: f64,
    l: f64,
    alpha_integral: f64,
    alpha_ypp_max: f64,
) -> Result<f64> {
    positive("M", m)?;
    positive("L", l)?;
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(MelanError::Domain(format!("{name} must be nonnegative, got {v}")));
        }
    }
    let mu = m.sqrt();
    let bracket = m - (a + b * alpha_integral) + 0.25 * l * l * l * (n - c + b * alpha_ypp_max);
    Ok(l * (0.5 * mu * l).tanh() / (2.0 * mu) * bracket)
}

/// Strict uniqueness condition
/// `L^3 N / 4 + M - 4 / L^2 < a + b ∫α + L^3 c / 4`.
#[allow(clippy::too_many_arguments)]
pub fn check_uniqueness(
    a: f64,
    b: f64,
    c: f64,
    m: f64,
    n: f64,
    l: f64,
    alpha_integral: f64,
) -> Result<ConditionReport> {
    positive("M", m)?;
    positive("L", l)?;
    let l3 = l * l * l;
    let lhs = 0.25 * l3 * n + m - 4.0 / (l * l);
    let rhs = a + b * alpha_integral + 0.25 * l3 * c;
    Ok(ConditionReport::below("uniqueness", lhs, rhs))
}

/// Everything that follows from choosing `β = λ sin(pi x / L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineConditions {
    /// Load envelope `p(x) <= envelope_a sin(pi x / L) + envelope_b`.
    pub envelope_a: f64,
    pub envelope_b: f64,
    /// Linearisation `M = a + 2 b λ L / pi`.
    pub m: f64,
    /// Linearisation `N = c + b λ pi^2 / L^2`.
    pub n: f64,
    /// Maximum principle for `(M, N, L)`.
    pub existence: ConditionReport,
    /// `λ (L^3 / 4) (2b / pi + b pi^2 / 4) <= 1`.
    pub uniqueness: ConditionReport,
}

impl SineConditions {
    pub fn reports(&self) -> [&ConditionReport; 2] {
        [&self.existence, &self.uniqueness]
    }
}

pub fn check_sine_conditions(a: f64, b: f64, c: f64, l: f64, lambda: f64) -> Result<SineConditions> {
    positive("a", a)?;
    positive("L", l)?;
    for (name, v) in [("b", b), ("c", c), ("lambda", lambda)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(MelanError::Domain(format!("{name} must be nonnegative, got {v}")));
        }
    }
    let k = PI / l;
    let envelope_a = lambda * k.powi(4) + a * lambda * k * k + 2.0 * b * lambda * lambda * PI / l;
    let envelope_b = 2.0 * lambda * c * l / PI;
    let m = a + 2.0 * b * lambda * l / PI;
    let n = c + b * lambda * k * k;
    let mut existence = check_positivity(m, n, l)?;
    existence.name = "sine-existence".into();
    let lhs = lambda * 0.25 * l * l * l * (2.0 * b / PI + b * PI * PI / 4.0);
    let uniqueness = ConditionReport::at_most("sine-uniqueness", lhs, 1.0);
    Ok(SineConditions { envelope_a, envelope_b, m, n, existence, uniqueness })
}
