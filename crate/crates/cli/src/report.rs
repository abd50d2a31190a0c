//! JSON report schemas. Every report written by the binary deserialises back
//! into the type here.

use melan_core::bridge::{ApplicabilityReport, EnvelopeCheck};
use melan_core::monotone::{Status, Verification};
use melan_core::ConditionReport;
use serde::{Deserialize, Serialize};

/// `summary.json` of `solve-linear`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSummary {
    pub m: f64,
    pub n: f64,
    pub l: f64,
    pub grid_points: usize,
    /// `N < 0`: the sign conclusions of the maximum principle do not apply.
    pub outside_corollary: bool,
    pub max_abs_y: f64,
    pub x_at_max: f64,
    pub integral_y: f64,
    pub residual: f64,
    pub positivity: ConditionReport,
    pub smallness: ConditionReport,
}

/// `conditions.json` of `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub problem_kind: String,
    /// `certified-unique`, `certified-existence`, `applicable`,
    /// `not-applicable` or `uncertified`.
    pub verdict: String,
    pub reports: Vec<ConditionReport>,
    pub m: Option<f64>,
    pub n: Option<f64>,
    /// `(A, B)` of `p <= A sin(pi x / L) + B`.
    pub envelope: Option<(f64, f64)>,
    pub lower_solution: Option<Verification>,
    pub upper_solution: Option<Verification>,
    pub bridge: Option<ApplicabilityReport>,
}

/// `trace.json` of `iterate`, also embedded in the bridge report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceReport {
    pub status: Status,
    pub certified: bool,
    pub iterations: usize,
    pub lambda: f64,
    pub m: f64,
    pub n: f64,
    pub rho: f64,
    pub grid_points: usize,
    pub lower_maxima: Vec<f64>,
    pub upper_maxima: Vec<f64>,
    pub gaps: Vec<f64>,
    pub bounds: Vec<f64>,
    pub positivity: ConditionReport,
    pub uniqueness: ConditionReport,
    pub warnings: Vec<String>,
}

/// `report.json` of `bridge-report`. The run fields are absent when the
/// report stops at the applicability stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeReport {
    pub applicability: ApplicabilityReport,
    pub envelope_check: EnvelopeCheck,
    /// Additional horizontal cable tension (kN).
    pub h_w: Option<f64>,
    /// Largest deflection of the final bracket midpoint (m).
    pub max_deflection: Option<f64>,
    pub x_at_max: Option<f64>,
    pub trace: Option<TraceReport>,
    pub warnings: Vec<String>,
}

pub fn condition_table(reports: &[ConditionReport]) -> String {
    let mut out = format!("{:<24} {:>14} {:>4} {:>14}  {}\n", "condition", "lhs", "", "rhs", "holds");
    for r in reports {
        let rel = if r.strict { "<" } else { "<=" };
        out += &format!(
            "{:<24} {:>14.6e} {:>4} {:>14.6e}  {}\n",
            r.name,
            r.lhs,
            rel,
            r.rhs,
            if r.satisfied { "yes" } else { "no" }
        );
    }
    out
}
