//! Monotone iteration between a lower and an upper solution of the
//! nonlinear problem
//!
//! ```text
//! w'''' - (a + b ∫w) w'' + c ∫w = p,   w = w'' = 0 at both ends.
//! ```
//!
//! Each step solves the linear problem with stiffness `(M, N)` and right side
//! `p + (a + b ∫y - M) y'' + (N - c) ∫y` built from the previous iterate,
//! exactly (closed-form kernels), so the curvature of every iterate is
//! available without differencing.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::criteria::{check_positivity, check_uniqueness, contraction_rho, ConditionReport};
use crate::error::{MelanError, Result};
use crate::linear::{second_difference, solve_linear, GridSolution, LinearProblem};
use crate::load::{LoadSpec, LoadTerm};
use crate::quadrature::{sup_diff, sup_norm, UniformGrid};

/// Relative tolerance of the order relations between iterates.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MelanProblem {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub l: f64,
    pub load: LoadSpec,
}

impl MelanProblem {
    pub fn new(a: f64, b: f64, c: f64, l: f64, load: LoadSpec) -> Result<Self> {
        let p = Self { a, b, c, l, load };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("L", self.l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MelanError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        self.load.validate(self.l)
    }
}

/// Samples of `y`, `y''` and the value of `∫ y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub y: Vec<f64>,
    pub ypp: Vec<f64>,
    pub integral: f64,
}

impl Curve {
    pub fn zero(points: usize) -> Self {
        Self { y: vec![0.0; points], ypp: vec![0.0; points], integral: 0.0 }
    }

    pub fn sine(lambda: f64, grid: &UniformGrid) -> Self {
        let l = grid.span();
        let k = (PI / l).powi(2);
        let s: Vec<f64> = grid.nodes().iter().map(|&x| (PI * x / l).sin()).collect();
        let mut y: Vec<f64> = s.iter().map(|v| lambda * v).collect();
        let mut ypp: Vec<f64> = s.iter().map(|v| -lambda * k * v).collect();
        let n = y.len();
        y[0] = 0.0;
        y[n - 1] = 0.0;
        ypp[0] = 0.0;
        ypp[n - 1] = 0.0;
        Self { y, ypp, integral: 2.0 * lambda * l / PI }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl From<GridSolution> for Curve {
    fn from(sol: GridSolution) -> Self {
        Self { y: sol.y, ypp: sol.ypp, integral: sol.integral_y }
    }
}

/// A candidate lower or upper solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    Zero,
    Sine { lambda: f64 },
    Sampled(Curve),
}

impl Candidate {
    pub fn curve(&self, grid: &UniformGrid) -> Result<Curve> {
        match self {
            Candidate::Zero => Ok(Curve::zero(grid.len())),
            Candidate::Sine { lambda } => Ok(Curve::sine(*lambda, grid)),
            Candidate::Sampled(c) => {
                if c.y.len() != grid.len() || c.ypp.len() != grid.len() {
                    return Err(MelanError::InvalidPair(format!(
                        "sampled candidate has {} points, grid has {}",
                        c.y.len(),
                        grid.len()
                    )));
                }
                Ok(c.clone())
            }
        }
    }
}

/// Outcome of checking one side of the differential inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub holds: bool,
    /// Largest signed defect; positive means the inequality fails there.
    pub worst: f64,
    pub worst_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

/// `w'''' - (a + b ∫w) w'' + c ∫w - p` at the nodes where it can be evaluated,
/// with the node positions.
fn operator_defect(candidate: &Candidate, problem: &MelanProblem, grid: &UniformGrid) -> Result<Vec<(f64, f64)>> {
    let nodes = grid.nodes();
    let p = problem.load.sample(&nodes, problem.l);
    let (a, b, c) = (problem.a, problem.b, problem.c);
    match candidate {
        Candidate::Zero => Ok(nodes.iter().zip(&p).map(|(&x, pi)| (x, -pi)).collect()),
        Candidate::Sine { lambda } => {
            let k = (PI / problem.l).powi(2);
            let integral = 2.0 * lambda * problem.l / PI;
            let amp = lambda * k * k + (a + b * integral) * lambda * k;
            Ok(nodes
                .iter()
                .zip(&p)
                .map(|(&x, pi)| (x, amp * (PI * x / problem.l).sin() + c * integral - pi))
                .collect())
        }
        Candidate::Sampled(_) => {
            let curve = candidate.curve(grid)?;
            let n = curve.len();
            if n < 5 {
                return Err(MelanError::InvalidGrid("sampled candidates need at least 5 points".into()));
            }
            let scale = sup_norm(&curve.y).max(f64::MIN_POSITIVE);
            let pp_scale = sup_norm(&curve.ypp).max(f64::MIN_POSITIVE);
            for &i in &[0, n - 1] {
                if curve.y[i].abs() > 1e-10 * scale || curve.ypp[i].abs() > 1e-10 * pp_scale {
                    return Err(MelanError::InvalidPair("candidate violates the hinged end conditions".into()));
                }
            }
            let h = grid.step();
            let k = a + b * curve.integral;
            Ok((2..n - 2)
                .map(|i| {
                    let d4 = second_difference(&curve.ypp, i, h);
                    (nodes[i], d4 - k * curve.ypp[i] + c * curve.integral - p[i])
                })
                .collect())
        }
    }
}

fn verify(candidate: &Candidate, problem: &MelanProblem, grid_points: usize, side: Side) -> Result<Verification> {
    problem.validate()?;
    let grid = UniformGrid::new(problem.l, grid_points)?;
    let defect = operator_defect(candidate, problem, &grid)?;
    let scale = problem.load.sample(&grid.nodes(), problem.l).iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    // differenced candidates carry truncation error; analytic ones only rounding
    let tol = match candidate {
        Candidate::Sampled(_) => 1e-6,
        _ => MONOTONE_TOLERANCE,
    } * scale;
    let sign = match side {
        Side::Lower => 1.0,
        Side::Upper => -1.0,
    };
    let (worst_x, worst) = defect
        .iter()
        .map(|&(x, d)| (x, sign * d))
        .fold((0.0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    Ok(Verification { holds: worst <= tol, worst, worst_x })
}

/// Checks `α'''' - (a + b ∫α) α'' + c ∫α <= p` at the grid nodes.
pub fn verify_lower(candidate: &Candidate, problem: &MelanProblem, grid_points: usize) -> Result<Verification> {
    verify(candidate, problem, grid_points, Side::Lower)
}

/// Checks `β'''' - (a + b ∫β) β'' + c ∫β >= p` at the grid nodes. For a sine
/// candidate the left side is exactly `A sin(pi x / L) + B`.
pub fn verify_upper(candidate: &Candidate, problem: &MelanProblem, grid_points: usize) -> Result<Verification> {
    verify(candidate, problem, grid_points, Side::Upper)
}

/// Ordered lower/upper pair together with the linearisation `(M, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    pub lower: Candidate,
    pub upper: Candidate,
    pub alpha: Curve,
    pub beta: Curve,
    pub lambda: Option<f64>,
    pub m: f64,
    pub n: f64,
    pub grid: UniformGrid,
}

impl BoundPair {
    /// Builds a pair and checks the ordering `0 <= α <= β`, `0 >= α'' >= β''`
    /// and the coefficient conditions `M >= a + b ∫β`, `N >= c - b min β''`.
    pub fn new(
        problem: &MelanProblem,
        lower: Candidate,
        upper: Candidate,
        m: f64,
        n: f64,
        grid_points: usize,
    ) -> Result<Self> {
        problem.validate()?;
        let grid = UniformGrid::odd(problem.l, grid_points)?;
        let alpha = lower.curve(&grid)?;
        let beta = upper.curve(&grid)?;
        let tol_y = MONOTONE_TOLERANCE * sup_norm(&beta.y).max(sup_norm(&alpha.y));
        let tol_pp = MONOTONE_TOLERANCE * sup_norm(&beta.ypp).max(sup_norm(&alpha.ypp));
        for i in 0..grid.len() {
            if alpha.y[i] < -tol_y || alpha.y[i] > beta.y[i] + tol_y {
                return Err(MelanError::InvalidPair(format!("0 <= alpha <= beta fails at x = {}", grid.x(i))));
            }
            if alpha.ypp[i] > tol_pp || alpha.ypp[i] < beta.ypp[i] - tol_pp {
                return Err(MelanError::InvalidPair(format!(
                    "0 >= alpha'' >= beta'' fails at x = {}",
                    grid.x(i)
                )));
            }
        }
        let min_beta_pp = beta.ypp.iter().cloned().fold(f64::INFINITY, f64::min);
        let need_m = problem.a + problem.b * beta.integral;
        let need_n = problem.c - problem.b * min_beta_pp;
        if m < need_m * (1.0 - 1e-12) {
            return Err(MelanError::InvalidPair(format!("M = {m} is below a + b ∫beta = {need_m}")));
        }
        if n < need_n * (1.0 - 1e-12) {
            return Err(MelanError::InvalidPair(format!("N = {n} is below c - b min beta'' = {need_n}")));
        }
        let lambda = match upper {
            Candidate::Sine { lambda } => Some(lambda),
            _ => None,
        };
        Ok(Self { lower, upper, alpha, beta, lambda, m, n, grid })
    }

    pub fn curvature_gap(&self) -> f64 {
        sup_diff(&self.alpha.ypp, &self.beta.ypp)
    }
}

/// `α ≡ 0`, `β = λ sin(pi x / L)`, `M = a + 2 b λ L / pi`,
/// `N = c + b λ pi^2 / L^2`.
pub fn make_sine_pair(problem: &MelanProblem, lambda: f64, grid_points: usize) -> Result<BoundPair> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(MelanError::InvalidPair(format!("lambda must be nonnegative, got {lambda}")));
    }
    let m = problem.a + 2.0 * problem.b * lambda * problem.l / PI;
    let n = problem.c + problem.b * lambda * (PI / problem.l).powi(2);
    BoundPair::new(problem, Candidate::Zero, Candidate::Sine { lambda }, m, n, grid_points)
}

/// One step of the scheme from `prev`.
pub fn iterate_once(prev: &Curve, pair: &BoundPair, problem: &MelanProblem) -> Result<Curve> {
    let points = pair.grid.len();
    if prev.len() != points || prev.ypp.len() != points {
        return Err(MelanError::InvalidGrid(format!(
            "iterate has {} points, pair grid has {points}",
            prev.len()
        )));
    }
    let slope = problem.a + problem.b * prev.integral - pair.m;
    let mut load = problem.load.clone();
    load.push(LoadTerm::Constant { value: (pair.n - problem.c) * prev.integral });
    if slope != 0.0 && prev.ypp.iter().any(|v| *v != 0.0) {
        load.push(LoadTerm::Sampled { values: prev.ypp.iter().map(|v| slope * v).collect() });
    }
    let linear = LinearProblem { m: pair.m, n: pair.n, l: problem.l, load };
    Ok(solve_linear(&linear, points)?.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIters,
    MonotonicityViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub side: Side,
    /// Iterate 0 is the starting curve.
    pub iterates: Vec<Curve>,
    pub rho: f64,
    /// `(L^2 / 4) max(ρ, 0)^n ‖α'' - β''‖∞` for each `n`.
    pub bounds: Vec<f64>,
    pub status: Status,
}

impl IterationTrace {
    pub fn maxima(&self) -> Vec<f64> {
        self.iterates.iter().map(Curve::max).collect()
    }

    pub fn last(&self) -> &Curve {
        self.iterates.last().expect("a trace always holds its starting curve")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rho: f64,
    /// `‖β_n - α_n‖∞` for each `n`.
    pub gaps: Vec<f64>,
    pub bounds: Vec<f64>,
    pub positivity: ConditionReport,
    pub uniqueness: ConditionReport,
    /// False when the run was forced past a failed hypothesis.
    pub certified: bool,
    pub status: Status,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneRun {
    pub lower: IterationTrace,
    pub upper: IterationTrace,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneOptions {
    pub max_iter: usize,
    /// Stop once `‖β_n - α_n‖∞ < tol`; `None` means `1e-8 max(1, λ)`.
    pub tol: Option<f64>,
    /// Proceed (unverified) when a hypothesis fails.
    pub force: bool,
    /// Report running out of iterations as an error instead of a status.
    pub require_convergence: bool,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: None, force: false, require_convergence: true }
    }
}

struct ChainBreak {
    side: &'static str,
    index: usize,
    excess: f64,
}

/// First violated relation of
/// `α_{n-1} <= α_n <= β_n <= β_{n-1}` and the reversed curvature chain.
fn check_chain(lo_prev: &Curve, lo: &Curve, hi: &Curve, hi_prev: &Curve, tol_y: f64, tol_pp: f64) -> Option<ChainBreak> {
    let mut worst: Option<ChainBreak> = None;
    let mut note = |side: &'static str, index: usize, excess: f64, tol: f64| {
        if excess > tol && worst.as_ref().is_none_or(|w| excess > w.excess) {
            worst = Some(ChainBreak { side, index, excess });
        }
    };
    for i in 0..lo.len() {
        note("lower", i, lo_prev.y[i] - lo.y[i], tol_y);
        note("lower", i, lo.ypp[i] - lo_prev.ypp[i], tol_pp);
        note("upper", i, hi.y[i] - hi_prev.y[i], tol_y);
        note("upper", i, hi_prev.ypp[i] - hi.ypp[i], tol_pp);
        note("order", i, lo.y[i] - hi.y[i], tol_y);
        note("order", i, hi.ypp[i] - lo.ypp[i], tol_pp);
    }
    worst
}

/// Runs both sequences until their gap drops below the tolerance.
pub fn run_monotone(problem: &MelanProblem, pair: &BoundPair, opts: &MonotoneOptions) -> Result<MonotoneRun> {
    problem.validate()?;
    let points = pair.grid.len();
    let l = problem.l;
    let mut warnings = Vec::new();
    let mut certified = true;

    let positivity = check_positivity(pair.m, pair.n, l)?;
    if !positivity.satisfied {
        if !opts.force {
            return Err(MelanError::NotApplicable(format!(
                "maximum principle fails for (M, N) = ({:e}, {:e}): N exceeds {:e}",
                pair.m, pair.n, positivity.rhs
            )));
        }
        certified = false;
        warnings.push(format!(
            "maximum principle fails (N = {:e} > {:e}); running unverified",
            pair.n, positivity.rhs
        ));
    }
    for (side, v) in [
        ("lower", verify_lower(&pair.lower, problem, points)?),
        ("upper", verify_upper(&pair.upper, problem, points)?),
    ] {
        if !v.holds {
            if !opts.force {
                return Err(MelanError::InvalidPair(format!(
                    "{side} solution inequality fails by {:e} at x = {}",
                    v.worst, v.worst_x
                )));
            }
            certified = false;
            warnings.push(format!("{side} solution inequality fails by {:e} at x = {}", v.worst, v.worst_x));
        }
    }

    let alpha_pp_max = pair.alpha.ypp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rho = contraction_rho(problem.a, problem.b, problem.c, pair.m, pair.n, l, pair.alpha.integral, alpha_pp_max)?;
    let uniqueness = check_uniqueness(problem.a, problem.b, problem.c, pair.m, pair.n, l, pair.alpha.integral)?;
    let bound0 = 0.25 * l * l * pair.curvature_gap();
    let bound = |n: usize| bound0 * rho.max(0.0).powi(n as i32);
    let tol = opts.tol.unwrap_or(1e-8 * pair.lambda.unwrap_or(1.0).max(1.0));

    let mut lower = vec![pair.alpha.clone()];
    let mut upper = vec![pair.beta.clone()];
    let mut gaps = vec![sup_diff(&pair.alpha.y, &pair.beta.y)];
    let mut bounds = vec![bound(0)];
    let mut status = if gaps[0] < tol { Status::Converged } else { Status::MaxIters };

    while status == Status::MaxIters && lower.len() <= opts.max_iter {
        let n = lower.len();
        let lo = iterate_once(&lower[n - 1], pair, problem)?;
        let hi = iterate_once(&upper[n - 1], pair, problem)?;
        let scale_y = [&lower[n - 1], &upper[n - 1], &lo, &hi].iter().map(|c| sup_norm(&c.y)).fold(0.0, f64::max);
        let scale_pp =
            [&lower[n - 1], &upper[n - 1], &lo, &hi].iter().map(|c| sup_norm(&c.ypp)).fold(0.0, f64::max);
        if let Some(br) = check_chain(
            &lower[n - 1],
            &lo,
            &hi,
            &upper[n - 1],
            MONOTONE_TOLERANCE * scale_y,
            MONOTONE_TOLERANCE * scale_pp,
        ) {
            let x = pair.grid.x(br.index);
            if certified {
                return Err(MelanError::MonotonicityViolation {
                    side: br.side.to_string(),
                    iteration: n,
                    x,
                    excess: br.excess,
                });
            }
            warnings.push(format!(
                "iteration {n}: {} ordering broken by {:e} at x = {x}",
                br.side, br.excess
            ));
        }
        gaps.push(sup_diff(&lo.y, &hi.y));
        bounds.push(bound(n));
        lower.push(lo);
        upper.push(hi);
        if gaps[n] < tol {
            status = Status::Converged;
        }
    }
    let iterations = lower.len() - 1;
    if status == Status::MaxIters && opts.require_convergence {
        return Err(MelanError::NotConverged { iterations, gap: gaps[iterations] });
    }
    if !certified && status == Status::Converged && warnings.iter().any(|w| w.starts_with("iteration")) {
        status = Status::MonotonicityViolation;
    }

    let trace = |side, iterates| IterationTrace { side, iterates, rho, bounds: bounds.clone(), status };
    Ok(MonotoneRun {
        lower: trace(Side::Lower, lower),
        upper: trace(Side::Upper, upper),
        verdict: Verdict { rho, gaps, bounds: bounds.clone(), positivity, uniqueness, certified, status, iterations, warnings },
    })
}

/// Iterates the scheme from an arbitrary start (not necessarily a lower or
/// upper solution) until consecutive iterates differ by less than `tol`.
pub fn iterate_from(start: Curve, pair: &BoundPair, problem: &MelanProblem, max_iter: usize, tol: f64) -> Result<Vec<Curve>> {
    let mut seq = vec![start];
    for n in 1..=max_iter {
        let next = iterate_once(&seq[n - 1], pair, problem)?;
        let step = sup_diff(&next.y, &seq[n - 1].y);
        seq.push(next);
        if step < tol {
            return Ok(seq);
        }
    }
    let gap = sup_diff(&seq[max_iter].y, &seq[max_iter - 1].y);
    Err(MelanError::NotConverged { iterations: max_iter, gap })
}

/// A-priori error `(L^2/4) ρ^n / (1 - ρ) ‖α'' - β''‖∞` and the gap bound
/// `(L^2/4) ρ^n ‖α'' - β''‖∞`, with `ρ` clamped at zero.
pub fn error_bounds(trace: &IterationTrace, pair: &BoundPair, n: usize) -> Result<(f64, f64)> {
    if !(trace.rho < 1.0) {
        return Err(MelanError::BoundUnavailable(trace.rho));
    }
    let r = trace.rho.max(0.0);
    let gap = 0.25 * pair.grid.span().powi(2) * r.powi(n as i32) * pair.curvature_gap();
    Ok((gap / (1.0 - r), gap))
}

/// `max |w'''' - (a + b ∫w) w'' + c ∫w - p| / max(1, max |p|)` over nodes
/// `2..m-2`, with the fourth derivative differenced from the exact `w''`.
pub fn nonlinear_residual(curve: &Curve, problem: &MelanProblem, grid: &UniformGrid) -> f64 {
    let nodes = grid.nodes();
    let p = problem.load.sample(&nodes, problem.l);
    let scale = p.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let h = grid.step();
    let k = problem.a + problem.b * curve.integral;
    (2..curve.len() - 2)
        .map(|i| (second_difference(&curve.ypp, i, h) - k * curve.ypp[i] + problem.c * curve.integral - p[i]).abs())
        .fold(0.0, f64::max)
        / scale
}
