//! Engineering front end: physical suspension-bridge data (kN, m) mapped to
//! the coefficients `(a, b, c)`, the sine-envelope applicability verdict and
//! a full deflection run with the additional cable tension.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::criteria::{check_positivity, sigma, ConditionReport};
use crate::error::{MelanError, Result};
use crate::load::{LoadSpec, LoadTerm};
use crate::monotone::{make_sine_pair, run_monotone, Curve, MelanProblem, MonotoneOptions, MonotoneRun};

/// Sag-span ratio above which the necessary condition on `b` already implies
/// the uniqueness condition.
pub const SAG_GATE: f64 = 1.0 / 15.32;

/// Usual range of sag-span ratios.
pub const TYPICAL_SAG: (f64, f64) = (1.0 / 14.0, 1.0 / 5.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeParams {
    /// Main span `L` (m).
    pub span: f64,
    /// Deck flexural rigidity `EI` (kN m^2).
    pub ei: f64,
    /// Cable axial stiffness `E_c A_c` (kN).
    pub ec_ac: f64,
    /// Sag-span ratio `n`.
    #[serde(default)]
    pub sag_ratio: Option<f64>,
    /// Horizontal cable tension `H` (kN).
    #[serde(default)]
    pub horizontal_tension: Option<f64>,
    /// Dead load `q` (kN/m).
    #[serde(default)]
    pub dead_load: Option<f64>,
    /// Cable length `L_c` (m); derived from the parabolic profile if absent.
    #[serde(default)]
    pub cable_length: Option<f64>,
    /// Upper-solution amplitude replacing `L / 100`; voids the verdict labels.
    #[serde(default)]
    pub lambda_override: Option<f64>,
}

/// Coefficients of the deck equation divided by `EI`, with the physical
/// quantities they were derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `q / H = 8 n / L`.
    pub q_over_h: f64,
    pub sag_ratio: f64,
    pub horizontal_tension: f64,
    pub dead_load: f64,
    pub dead_load_derived: bool,
    pub cable_length: f64,
    pub cable_length_derived: bool,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MelanError::InvalidParams(format!("{name} must be positive, got {v}")))
    }
}

/// Length of the parabolic cable `y' = qh (L/2 - x)` over the span:
/// `(L/2) sqrt(1 + z^2) + asinh(z) / qh` with `z = L qh / 2`.
pub fn cable_length(l: f64, qh: f64) -> Result<f64> {
    positive("span", l)?;
    positive("q/H", qh)?;
    let z = 0.5 * l * qh;
    Ok(0.5 * l * (1.0 + z * z).sqrt() + z.asinh() / qh)
}

pub fn derive_coefficients(bp: &BridgeParams) -> Result<Coefficients> {
    positive("span", bp.span)?;
    positive("EI", bp.ei)?;
    positive("EcAc", bp.ec_ac)?;
    for (name, v) in [
        ("sag_ratio", bp.sag_ratio),
        ("horizontal_tension", bp.horizontal_tension),
        ("dead_load", bp.dead_load),
        ("cable_length", bp.cable_length),
        ("lambda_override", bp.lambda_override),
    ] {
        if let Some(v) = v {
            positive(name, v)?;
        }
    }
    let l = bp.span;
    let direct = match (bp.dead_load, bp.horizontal_tension) {
        (Some(q), Some(h)) => Some(q / h),
        _ => None,
    };
    let qh = match (bp.sag_ratio, direct) {
        (Some(n), Some(d)) => {
            let from_n = 8.0 * n / l;
            if ((from_n - d) / d).abs() >= 1e-6 {
                return Err(MelanError::InvalidParams(format!(
                    "sag ratio gives q/H = {from_n}, dead load and tension give {d}"
                )));
            }
            from_n
        }
        (Some(n), None) => 8.0 * n / l,
        (None, Some(d)) => d,
        (None, None) => {
            return Err(if bp.cable_length.is_none() {
                MelanError::MissingCableLength
            } else {
                MelanError::InvalidParams("need the sag ratio, or both dead load and horizontal tension".into())
            })
        }
    };
    let h = match (bp.horizontal_tension, bp.dead_load) {
        (Some(h), _) => h,
        (None, Some(q)) => q / qh,
        (None, None) => {
            return Err(MelanError::InvalidParams("need the horizontal tension or the dead load".into()))
        }
    };
    let (dead_load, dead_load_derived) = match bp.dead_load {
        Some(q) => (q, false),
        None => (h * qh, true),
    };
    let (lc, lc_derived) = match bp.cable_length {
        Some(lc) => (lc, false),
        None => (cable_length(l, qh)?, true),
    };
    let a = h / bp.ei;
    let b = qh * bp.ec_ac / (bp.ei * lc);
    let c = qh * b;
    Ok(Coefficients {
        a,
        b,
        c,
        q_over_h: qh,
        sag_ratio: qh * l / 8.0,
        horizontal_tension: h,
        dead_load,
        dead_load_derived,
        cable_length: lc,
        cable_length_derived: lc_derived,
    })
}

/// Upper-solution amplitude actually used.
fn lambda_of(bp: &BridgeParams) -> f64 {
    bp.lambda_override.unwrap_or(bp.span / 100.0)
}

/// Physical live-load envelope `p(x) <= A sin(pi x / L) + B` (kN/m).
pub fn load_envelope(bp: &BridgeParams) -> Result<(f64, f64)> {
    let co = derive_coefficients(bp)?;
    let l = bp.span;
    let stiff = bp.ec_ac / co.cable_length;
    match bp.lambda_override {
        None => {
            let n = co.sag_ratio;
            let a = PI.powi(4) * bp.ei / (100.0 * l.powi(3))
                + co.horizontal_tension * PI * PI / (100.0 * l)
                + n * PI / 625.0 * stiff;
            let b = 32.0 * n * n / (25.0 * PI) * stiff;
            Ok((a, b))
        }
        Some(lambda) => {
            let k = PI / l;
            let a = lambda * k.powi(4) + co.a * lambda * k * k + 2.0 * co.b * lambda * lambda * PI / l;
            let b = 2.0 * lambda * co.c * l / PI;
            Ok((bp.ei * a, bp.ei * b))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BridgeVerdict {
    CertifiedUnique,
    CertifiedExistence,
    NotApplicable,
    /// A custom amplitude was used, so the standard labels do not apply.
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicabilityReport {
    pub coefficients: Coefficients,
    pub lambda: f64,
    pub m: f64,
    pub n: f64,
    /// `N <= (4M / L^3) σ(sqrt(M) L)` for the sine pair.
    pub key_condition: ConditionReport,
    /// The same condition written in terms of `b` only.
    pub key_condition_b_form: ConditionReport,
    pub necessary_b: ConditionReport,
    pub necessary_c: ConditionReport,
    pub uniqueness: ConditionReport,
    pub sag_gate: ConditionReport,
    /// `(A, B)` of the envelope in kN/m.
    pub envelope: (f64, f64),
    pub verdict: BridgeVerdict,
    pub warnings: Vec<String>,
}

impl ApplicabilityReport {
    pub fn reports(&self) -> Vec<&ConditionReport> {
        vec![
            &self.key_condition,
            &self.key_condition_b_form,
            &self.necessary_b,
            &self.necessary_c,
            &self.uniqueness,
            &self.sag_gate,
        ]
    }
}

pub fn applicability(bp: &BridgeParams) -> Result<ApplicabilityReport> {
    let co = derive_coefficients(bp)?;
    let l = bp.span;
    let n_sag = co.sag_ratio;
    let lambda = lambda_of(bp);
    let (a, b, c) = (co.a, co.b, co.c);
    let m = a + 2.0 * b * lambda * l / PI;
    let n = c + b * lambda * PI * PI / (l * l);
    let mut warnings = Vec::new();
    if n_sag < TYPICAL_SAG.0 || n_sag > TYPICAL_SAG.1 {
        warnings.push(format!("sag ratio {n_sag:.4} lies outside the usual range [1/14, 1/5]"));
    }
    if co.cable_length_derived {
        warnings.push(format!("cable length derived from the parabolic profile: {:.4} m", co.cable_length));
    }
    if co.dead_load_derived {
        warnings.push(format!("dead load derived as q = H (q/H) = {:.4} kN/m", co.dead_load));
    }

    let l4 = l.powi(4);
    let (key, key_b) = match bp.lambda_override {
        None => {
            // written with c and n, and with b alone
            let n_stated = c * (1.0 + PI * PI / (800.0 * n_sag));
            let m_stated = a + c * l.powi(3) / (400.0 * n_sag * PI);
            let w = m_stated.sqrt() * l;
            let rhs = 4.0 * w * w / l.powi(5) * sigma(w)?;
            let key = ConditionReport::at_most("key-condition", n_stated, rhs);
            let mb = a + b * l * l / (50.0 * PI);
            let wb = mb.sqrt() * l;
            let key_b = ConditionReport::at_most(
                "key-condition-b-form",
                (800.0 * n_sag + PI * PI) / 100.0 * b,
                4.0 * wb * wb / l4 * sigma(wb)?,
            );
            (key, key_b)
        }
        Some(_) => {
            let mut key = check_positivity(m, n, l)?;
            key.name = "key-condition".into();
            let mut key_b = ConditionReport::at_most("key-condition-b-form", key.lhs * l, key.rhs * l);
            key_b.satisfied &= key.satisfied;
            (key, key_b)
        }
    };
    if key.satisfied != key_b.satisfied {
        warnings.push("the c-form and b-form of the key condition disagree at rounding level".into());
    }
    let necessary_b = ConditionReport::at_most("necessary-b", (800.0 * n_sag + PI * PI) / 100.0 * b, 80.0 / l4);
    // Same inequality as necessary-b after c = (8n/L) b.
    let necessary_c =
        ConditionReport::at_most("necessary-c", (800.0 * n_sag + PI * PI) / (800.0 * n_sag) * c, 80.0 / (l4 * l));
    let uniqueness = ConditionReport::at_most("uniqueness", (40.0 / PI + 5.0 * PI * PI) / 100.0 * b, 80.0 / l4);
    // n >= 1/15.32 written as 1/15.32 <= n
    let sag_gate = ConditionReport::at_most("sag-gate", SAG_GATE, n_sag);
    let verdict = if bp.lambda_override.is_some() {
        BridgeVerdict::Uncertified
    } else if key.satisfied && (sag_gate.satisfied || uniqueness.satisfied) {
        BridgeVerdict::CertifiedUnique
    } else if key.satisfied {
        BridgeVerdict::CertifiedExistence
    } else {
        BridgeVerdict::NotApplicable
    };
    Ok(ApplicabilityReport {
        envelope: load_envelope(bp)?,
        coefficients: co,
        lambda,
        m,
        n,
        key_condition: key,
        key_condition_b_form: key_b,
        necessary_b,
        necessary_c,
        uniqueness,
        sag_gate,
        verdict,
        warnings,
    })
}

/// Positions at which a live load is compared with the envelope: 1001
/// uniform points, plus every sample and sample midpoint of sampled terms.
fn envelope_points(load: &LoadSpec, l: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..1001).map(|i| l * i as f64 / 1000.0).collect();
    for term in load.terms() {
        if let LoadTerm::Sampled { values } = term {
            let k = values.len();
            xs.extend((0..2 * k - 1).map(|j| l * j as f64 / (2 * (k - 1)) as f64));
        }
    }
    xs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub holds: bool,
    /// Largest `p(x) - (A sin(pi x / L) + B)`.
    pub worst_excess: f64,
    pub worst_x: f64,
}

pub fn check_envelope(bp: &BridgeParams, live_load: &LoadSpec) -> Result<EnvelopeCheck> {
    live_load.validate(bp.span)?;
    let (a, b) = load_envelope(bp)?;
    let l = bp.span;
    let tol = 1e-12 * (a.abs() + b.abs()).max(1.0);
    let (worst_x, worst_excess) = envelope_points(live_load, l)
        .into_iter()
        .map(|x| (x, live_load.eval(x, l) - (a * (PI * x / l).sin() + b)))
        .fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    Ok(EnvelopeCheck { holds: worst_excess <= tol, worst_excess, worst_x })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeSolution {
    pub report: ApplicabilityReport,
    pub envelope_check: EnvelopeCheck,
    pub problem: MelanProblem,
    pub run: MonotoneRun,
    /// Midpoint of the final lower and upper iterates (m).
    pub deflection: Curve,
    /// Additional horizontal cable tension `(EcAc / Lc)(q/H) ∫w` (kN).
    pub h_w: f64,
    pub warnings: Vec<String>,
}

/// Builds the scaled problem with live load `p / EI` and runs the sine-pair
/// iteration with `λ = L / 100` (or the override).
pub fn solve_bridge(
    bp: &BridgeParams,
    live_load: &LoadSpec,
    grid_points: usize,
    opts: &MonotoneOptions,
) -> Result<BridgeSolution> {
    let report = applicability(bp)?;
    let mut warnings = report.warnings.clone();
    let envelope_check = check_envelope(bp, live_load)?;
    if !envelope_check.holds {
        if !opts.force {
            let (a, b) = report.envelope;
            let x = envelope_check.worst_x;
            return Err(MelanError::EnvelopeViolation {
                x,
                load: live_load.eval(x, bp.span),
                envelope: a * (PI * x / bp.span).sin() + b,
            });
        }
        warnings.push(format!(
            "live load exceeds the envelope by {:e} kN/m at x = {}",
            envelope_check.worst_excess, envelope_check.worst_x
        ));
    }
    if report.verdict == BridgeVerdict::NotApplicable {
        if !opts.force {
            return Err(MelanError::NotApplicable(format!(
                "key condition fails: {:e} > {:e}",
                report.key_condition.lhs, report.key_condition.rhs
            )));
        }
        warnings.push("key condition fails; running unverified".into());
    }
    let co = &report.coefficients;
    let problem = MelanProblem::new(co.a, co.b, co.c, bp.span, live_load.scaled(1.0 / bp.ei))?;
    let pair = make_sine_pair(&problem, report.lambda, grid_points)?;
    let run = run_monotone(&problem, &pair, opts)?;
    warnings.extend(run.verdict.warnings.iter().cloned());
    let (lo, hi) = (run.lower.last(), run.upper.last());
    let deflection = Curve {
        y: lo.y.iter().zip(&hi.y).map(|(a, b)| 0.5 * (a + b)).collect(),
        ypp: lo.ypp.iter().zip(&hi.ypp).map(|(a, b)| 0.5 * (a + b)).collect(),
        integral: 0.5 * (lo.integral + hi.integral),
    };
    let h_w = bp.ec_ac / co.cable_length * co.q_over_h * deflection.integral;
    Ok(BridgeSolution { report, envelope_check, problem, run, deflection, h_w, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::check_sine_conditions;
    use crate::quadrature::simpson_fn;

    /// Short span with a deep sag.
    fn short_span() -> BridgeParams {
        BridgeParams {
            span: 100.0,
            ei: 4.557e8,
            ec_ac: 4.121_73e6,
            sag_ratio: Some(1.0 / 9.0),
            horizontal_tension: Some(19_850.4),
            dead_load: None,
            cable_length: Some(103.2),
            lambda_override: None,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn cable_length_cases() {
        assert!((cable_length(100.0, 0.008888).unwrap() - 103.2).abs() < 0.1);
        assert!(rel(cable_length(100.0, 1e-9).unwrap(), 100.0) < 1e-6);
        let qh: f64 = 0.008888;
        let arc = simpson_fn(0.0, 100.0, 2001, |x| (1.0 + (qh * (50.0 - x)).powi(2)).sqrt());
        assert!(rel(cable_length(100.0, qh).unwrap(), arc) < 1e-12);
        assert!(cable_length(100.0, 0.0).is_err());
    }

    #[test]
    fn coefficients_follow_the_cable_relation() {
        let co = derive_coefficients(&short_span()).unwrap();
        assert_eq!(co.c, co.q_over_h * co.b);
        assert!(rel(co.a, 4.356e-5) < 5e-3);
        assert!(rel(co.b, 7.7898e-7) < 5e-3);
        assert!(rel(co.c, 6.9236e-9) < 5e-3);
        assert!(co.dead_load_derived && !co.cable_length_derived);
    }

    #[test]
    fn conflicting_or_missing_inputs() {
        let mut bp = short_span();
        bp.dead_load = Some(1.0);
        assert!(matches!(derive_coefficients(&bp), Err(MelanError::InvalidParams(_))));
        let bp = BridgeParams { sag_ratio: None, horizontal_tension: None, cable_length: None, ..short_span() };
        assert!(matches!(derive_coefficients(&bp), Err(MelanError::MissingCableLength)));
        let bp = BridgeParams { sag_ratio: None, dead_load: Some(176.4), ..short_span() };
        let co = derive_coefficients(&bp).unwrap();
        assert!(rel(co.sag_ratio, 176.4 / 19_850.4 * 12.5) < 1e-12);
    }

    #[test]
    fn envelope_two_routes_agree() {
        let bp = short_span();
        let co = derive_coefficients(&bp).unwrap();
        let (a, b) = load_envelope(&bp).unwrap();
        let s = check_sine_conditions(co.a, co.b, co.c, bp.span, bp.span / 100.0).unwrap();
        assert!(rel(a, bp.ei * s.envelope_a) < 1e-12);
        assert!(rel(b, bp.ei * s.envelope_b) < 1e-12);
        let tiny = BridgeParams { ei: 1e-300, horizontal_tension: Some(1e-300), ec_ac: 1e-300, ..bp };
        let (a0, b0) = load_envelope(&tiny).unwrap();
        assert!(a0.abs() < 1e-290 && b0.abs() < 1e-290);
    }

    #[test]
    fn key_condition_forms_agree() {
        let r = applicability(&short_span()).unwrap();
        assert_eq!(r.key_condition.satisfied, r.key_condition_b_form.satisfied);
        assert!(rel(r.key_condition.lhs, r.n) < 1e-12);
        let direct = check_positivity(r.m, r.n, 100.0).unwrap();
        assert!(rel(direct.rhs, r.key_condition.rhs) < 1e-12);
        assert!(rel(r.key_condition_b_form.lhs, 100.0 * r.n) < 1e-12);
        assert_eq!(r.verdict, BridgeVerdict::CertifiedUnique);
        assert_eq!(r.necessary_b.satisfied, r.necessary_c.satisfied);
        let ratio = |c: &ConditionReport| c.lhs / c.rhs;
        assert!(rel(ratio(&r.necessary_b), ratio(&r.necessary_c)) < 1e-12);
    }

    #[test]
    fn zero_live_load() {
        let sol = solve_bridge(&short_span(), &LoadSpec::zero(), 201, &MonotoneOptions::default()).unwrap();
        // the lower sequence stays at zero; the upper one decays to the stopping tolerance
        assert!(sol.run.lower.last().y.iter().all(|v| *v == 0.0));
        assert!(sol.deflection.y.iter().all(|v| v.abs() < 1e-8));
        assert!(sol.h_w.abs() < 1e-3);
    }

    #[test]
    fn override_voids_labels() {
        let bp = BridgeParams { lambda_override: Some(0.5), ..short_span() };
        assert_eq!(applicability(&bp).unwrap().verdict, BridgeVerdict::Uncertified);
    }
}
