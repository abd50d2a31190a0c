//! The four workflows. Each writes its artifacts into the output directory
//! and returns the exit status together with a short human summary.

use std::path::Path;

use melan_core::bridge::{applicability, check_envelope, solve_bridge, BridgeVerdict};
use melan_core::criteria::{check_positivity, check_sine_conditions, check_smallness};
use melan_core::linear::{residual, solve_linear};
use melan_core::monotone::{make_sine_pair, run_monotone, verify_lower, verify_upper, IterationTrace, Status};
use melan_core::{Candidate, LinearProblem, MelanProblem, MonotoneOptions, MonotoneRun, UniformGrid};

use crate::config::{Mode, ProblemBlock, RunConfig};
use crate::output::{ensure_dir, write_curve, write_json, write_text};
use crate::report::{condition_table, BridgeReport, CheckReport, LinearSummary, TraceReport};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub lines: Vec<String>,
}

impl Outcome {
    fn ok(lines: Vec<String>) -> Self {
        Self { code: 0, lines }
    }
}

pub fn run(mode: Mode, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate(mode)?;
    ensure_dir(&cfg.output.dir)?;
    match mode {
        Mode::SolveLinear => solve(cfg),
        Mode::Check => check(cfg),
        Mode::Iterate => iterate(cfg),
        Mode::BridgeReport => bridge_report(cfg),
    }
}

fn options(cfg: &RunConfig) -> MonotoneOptions {
    MonotoneOptions {
        max_iter: cfg.numerics.max_iter,
        tol: cfg.numerics.tol,
        force: cfg.numerics.force,
        require_convergence: false,
    }
}

fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ProblemBlock::Linear { m, n, l } = cfg.problem else { unreachable!("checked by validate") };
    let problem = LinearProblem::new(m, n, l, cfg.load_spec()?)?;
    let points = cfg.numerics.grid_points;
    let sol = solve_linear(&problem, points)?;
    let dir = &cfg.output.dir;
    let csv = write_curve(dir, "solution.csv", &sol.nodes(), &sol.y, &sol.ypp)?;
    let (x_at_max, y_max) = sol.max_abs();
    let summary = LinearSummary {
        m,
        n,
        l,
        grid_points: points,
        outside_corollary: sol.meta.outside_corollary,
        max_abs_y: y_max.abs(),
        x_at_max,
        integral_y: sol.integral_y,
        residual: if points >= 7 { residual(&sol, &problem)? } else { f64::NAN },
        positivity: check_positivity(m, n, l)?,
        smallness: check_smallness(m, n, l)?,
    };
    let json = write_json(dir, "summary.json", &summary)?;
    let mut lines = vec![
        format!("max |y| = {:.10e} at x = {:.6}", summary.max_abs_y, summary.x_at_max),
        format!("integral of y = {:.10e}", summary.integral_y),
        format!("scaled residual = {:.3e}", summary.residual),
    ];
    if summary.outside_corollary {
        lines.push("note: N < 0, sign conclusions of the maximum principle do not apply".into());
    }
    lines.push(format!("wrote {} and {}", csv.display(), json.display()));
    Ok(Outcome::ok(lines))
}

fn check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let load = cfg.load_spec()?;
    let points = cfg.numerics.grid_points;
    let report = match &cfg.problem {
        ProblemBlock::Linear { m, n, l } => {
            LinearProblem::new(*m, *n, *l, load)?;
            let positivity = check_positivity(*m, *n, *l)?;
            let verdict = if positivity.satisfied { "applicable" } else { "not-applicable" };
            CheckReport {
                problem_kind: "linear".into(),
                verdict: verdict.into(),
                reports: vec![positivity, check_smallness(*m, *n, *l)?],
                m: Some(*m),
                n: Some(*n),
                envelope: None,
                lower_solution: None,
                upper_solution: None,
                bridge: None,
            }
        }
        ProblemBlock::Melan { a, b, c, l, lambda } => {
            let problem = MelanProblem::new(*a, *b, *c, *l, load)?;
            let sc = check_sine_conditions(*a, *b, *c, *l, *lambda)?;
            let lower = verify_lower(&Candidate::Zero, &problem, points)?;
            let upper = verify_upper(&Candidate::Sine { lambda: *lambda }, &problem, points)?;
            let verdict = match (sc.existence.satisfied && lower.holds && upper.holds, sc.uniqueness.satisfied) {
                (false, _) => "not-applicable",
                (true, true) => "certified-unique",
                (true, false) => "certified-existence",
            };
            CheckReport {
                problem_kind: "melan".into(),
                verdict: verdict.into(),
                reports: vec![sc.existence.clone(), sc.uniqueness.clone()],
                m: Some(sc.m),
                n: Some(sc.n),
                envelope: Some((sc.envelope_a, sc.envelope_b)),
                lower_solution: Some(lower),
                upper_solution: Some(upper),
                bridge: None,
            }
        }
        ProblemBlock::Bridge(bp) => {
            let r = applicability(bp)?;
            let upper = if cfg.load.is_empty() {
                None
            } else {
                let env = check_envelope(bp, &load)?;
                Some(melan_core::monotone::Verification {
                    holds: env.holds,
                    worst: env.worst_excess,
                    worst_x: env.worst_x,
                })
            };
            let holds = upper.map_or(true, |u| u.holds);
            let verdict = match r.verdict {
                BridgeVerdict::NotApplicable => "not-applicable",
                _ if !holds => "not-applicable",
                BridgeVerdict::CertifiedUnique => "certified-unique",
                BridgeVerdict::CertifiedExistence => "certified-existence",
                BridgeVerdict::Uncertified => "uncertified",
            };
            CheckReport {
                problem_kind: "bridge".into(),
                verdict: verdict.into(),
                reports: r.reports().into_iter().cloned().collect(),
                m: Some(r.m),
                n: Some(r.n),
                envelope: Some(r.envelope),
                lower_solution: None,
                upper_solution: upper,
                bridge: Some(r),
            }
        }
    };
    let dir = &cfg.output.dir;
    let table = condition_table(&report.reports);
    let mut text = table.clone();
    text += &format!("verdict: {}\n", report.verdict);
    if let Some((a, b)) = report.envelope {
        text += &format!("load envelope: p(x) <= {a:.6e} sin(pi x / L) + {b:.6e}\n");
    }
    if let Some(u) = &report.upper_solution {
        if !u.holds {
            text += &format!("load exceeds the envelope by {:.3e} at x = {}\n", u.worst, u.worst_x);
        }
    }
    write_json(dir, "conditions.json", &report)?;
    write_text(dir, "conditions.txt", &text)?;
    let code = if report.verdict == "not-applicable" && !cfg.numerics.force { 2 } else { 0 };
    Ok(Outcome { code, lines: text.lines().map(str::to_string).collect() })
}

fn write_traces(dir: &Path, grid: &UniformGrid, run: &MonotoneRun) -> Result<(), CliError> {
    let nodes = grid.nodes();
    let sides: [(&str, &IterationTrace); 2] = [("lower", &run.lower), ("upper", &run.upper)];
    for (side, trace) in sides {
        for (k, c) in trace.iterates.iter().enumerate() {
            write_curve(dir, &format!("{side}_{k}.csv"), &nodes, &c.y, &c.ypp)?;
        }
    }
    Ok(())
}

fn trace_report(run: &MonotoneRun, lambda: f64, m: f64, n: f64, points: usize) -> TraceReport {
    let v = &run.verdict;
    TraceReport {
        status: v.status,
        certified: v.certified,
        iterations: v.iterations,
        lambda,
        m,
        n,
        rho: v.rho,
        grid_points: points,
        lower_maxima: run.lower.maxima(),
        upper_maxima: run.upper.maxima(),
        gaps: v.gaps.clone(),
        bounds: v.bounds.clone(),
        positivity: v.positivity.clone(),
        uniqueness: v.uniqueness.clone(),
        warnings: v.warnings.clone(),
    }
}

fn trace_lines(t: &TraceReport) -> Vec<String> {
    let mut lines = vec![format!(
        "status {:?} after {} iterations (certified: {}, rho = {:.4e})",
        t.status, t.iterations, t.certified, t.rho
    )];
    for k in 0..t.lower_maxima.len().min(4) {
        lines.push(format!(
            "n = {k}: max lower = {:.8e}, max upper = {:.8e}, gap = {:.3e}",
            t.lower_maxima[k], t.upper_maxima[k], t.gaps[k]
        ));
    }
    if let (Some(lo), Some(hi)) = (t.lower_maxima.last(), t.upper_maxima.last()) {
        lines.push(format!("final bracket for max y: [{lo:.10e}, {hi:.10e}]"));
    }
    lines.extend(t.warnings.iter().map(|w| format!("warning: {w}")));
    lines
}

fn finish_status(t: &TraceReport, lines: Vec<String>) -> Result<Outcome, CliError> {
    if t.status == Status::MaxIters {
        return Err(CliError::NotConverged(format!(
            "no convergence after {} iterations (gap {:.3e}); artifacts written",
            t.iterations,
            t.gaps.last().copied().unwrap_or(f64::NAN)
        )));
    }
    Ok(Outcome::ok(lines))
}

fn iterate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ProblemBlock::Melan { a, b, c, l, lambda } = cfg.problem else { unreachable!("checked by validate") };
    let problem = MelanProblem::new(a, b, c, l, cfg.load_spec()?)?;
    let points = cfg.numerics.grid_points;
    let pair = make_sine_pair(&problem, lambda, points)?;
    let run = run_monotone(&problem, &pair, &options(cfg))?;
    let dir = &cfg.output.dir;
    write_traces(dir, &pair.grid, &run)?;
    let trace = trace_report(&run, lambda, pair.m, pair.n, points);
    write_json(dir, "trace.json", &trace)?;
    let lines = trace_lines(&trace);
    finish_status(&trace, lines)
}

fn bridge_report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ProblemBlock::Bridge(bp) = &cfg.problem else { unreachable!("checked by validate") };
    let load = cfg.load_spec()?;
    let dir = &cfg.output.dir;
    let points = cfg.numerics.grid_points;
    let app = applicability(bp)?;
    let envelope_check = check_envelope(bp, &load)?;
    let mut report = BridgeReport {
        applicability: app.clone(),
        envelope_check,
        h_w: None,
        max_deflection: None,
        x_at_max: None,
        trace: None,
        warnings: app.warnings.clone(),
    };
    let mut lines: Vec<String> = condition_table(&app.reports().into_iter().cloned().collect::<Vec<_>>())
        .lines()
        .map(str::to_string)
        .collect();
    lines.push(format!("verdict: {}", serde_json::to_value(app.verdict).expect("verdict").as_str().unwrap_or("")));
    let blocked = (app.verdict == BridgeVerdict::NotApplicable || !envelope_check.holds) && !cfg.numerics.force;
    if blocked {
        write_json(dir, "report.json", &report)?;
        let err = if envelope_check.holds {
            melan_core::MelanError::NotApplicable(format!(
                "key condition fails: {:.4e} > {:.4e}",
                app.key_condition.lhs, app.key_condition.rhs
            ))
        } else {
            melan_core::MelanError::EnvelopeViolation {
                x: envelope_check.worst_x,
                load: load.eval(envelope_check.worst_x, bp.span),
                envelope: load.eval(envelope_check.worst_x, bp.span) - envelope_check.worst_excess,
            }
        };
        return Err(err.into());
    }
    let sol = solve_bridge(bp, &load, points, &options(cfg))?;
    let grid = UniformGrid::odd(bp.span, points)?;
    write_traces(dir, &grid, &sol.run)?;
    let nodes = grid.nodes();
    write_curve(dir, "deflection.csv", &nodes, &sol.deflection.y, &sol.deflection.ypp)?;
    let (i_max, y_max) = sol
        .deflection
        .y
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let trace = trace_report(&sol.run, sol.report.lambda, sol.report.m, sol.report.n, points);
    report.h_w = Some(sol.h_w);
    report.max_deflection = Some(y_max);
    report.x_at_max = Some(nodes[i_max]);
    report.warnings = sol.warnings.clone();
    report.trace = Some(trace.clone());
    write_json(dir, "report.json", &report)?;
    lines.extend(trace_lines(&trace));
    lines.push(format!("max deflection = {y_max:.8e} m at x = {:.4} m", nodes[i_max]));
    lines.push(format!("additional cable tension h(w) = {:.6e} kN", sol.h_w));
    finish_status(&trace, lines)
}
