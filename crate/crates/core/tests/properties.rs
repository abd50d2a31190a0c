use std::f64::consts::PI;

use melan_core::bridge::{applicability, check_envelope, derive_coefficients, load_envelope, solve_bridge};
use melan_core::criteria::{check_positivity, check_sine_conditions, check_uniqueness, sigma};
use melan_core::kernel::{green_g, green_g0, green_gm, psi, zeta};
use melan_core::linear::{gp_convolution, load_moment_g, picard_iterate, solve_linear};
use melan_core::monotone::{iterate_from, make_sine_pair, nonlinear_residual, run_monotone, verify_upper};
use melan_core::quadrature::{simpson, simpson_fn, sup_diff, sup_norm};
use melan_core::{
    BridgeParams, Candidate, Curve, KernelParams, LinearProblem, LoadSpec, LoadTerm, MelanProblem, MonotoneOptions,
    UniformGrid,
};
use proptest::prelude::*;

fn kernel_params() -> impl Strategy<Value = (f64, f64)> {
    // (M, L) with sqrt(M) L spread over several decades
    (0.2..10.0f64, -4.0..4.0f64).prop_map(|(l, logw)| {
        let w = 10f64.powf(logw).min(700.0);
        ((w / l).powi(2), l)
    })
}

fn nonnegative_load() -> impl Strategy<Value = LoadSpec> {
    (0.0..2.0f64, 0.0..2.0f64, 0.0..1.0f64, 0.0..1.0f64, prop::collection::vec(0.0..1.0f64, 3..30), 0usize..4)
        .prop_map(|(k, s, c0, c1, samples, pick)| {
            let mut terms = vec![LoadTerm::Constant { value: k + 0.01 }];
            match pick {
                0 => terms.push(LoadTerm::SineHalfWave { amplitude: s }),
                1 => terms.push(LoadTerm::Affine { c0, c1 }),
                2 => terms.push(LoadTerm::Sampled { values: samples }),
                _ => {}
            }
            LoadSpec::new(terms).unwrap()
        })
}

fn analytic_load() -> impl Strategy<Value = LoadSpec> {
    (-2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -3.0..3.0f64).prop_map(
        |(k, c1, s, c3, sc, rate)| {
            LoadSpec::new(vec![
                LoadTerm::Affine { c0: k, c1 },
                LoadTerm::SineHalfWave { amplitude: s },
                LoadTerm::Cubic { c3 },
                LoadTerm::SinhTerm { coef: sc, rate },
            ])
            .unwrap()
        },
    )
}

/// Integral over `[lo, hi]` split at interior kinks.
fn piecewise(lo: f64, hi: f64, kinks: &[f64], n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut cuts = vec![lo];
    cuts.extend(kinks.iter().cloned().filter(|&k| k > lo && k < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| simpson_fn(w[0], w[1], n, &mut f)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_symmetric((m, l) in kernel_params(), t in 0.0..=1.0f64, s in 0.0..=1.0f64) {
        let kp = KernelParams::new(m, l).unwrap();
        let (t, s) = (t * l, s * l);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-300;
        prop_assert!(close(green_g0(t, s, l).unwrap(), green_g0(s, t, l).unwrap()));
        prop_assert!(close(green_gm(t, s, &kp).unwrap(), green_gm(s, t, &kp).unwrap()));
        prop_assert!(close(green_g(t, s, &kp).unwrap(), green_g(s, t, &kp).unwrap()));
    }

    #[test]
    fn kernel_bounds((m, l) in kernel_params(), t in 0.0..=1.0f64, s in 0.0..=1.0f64) {
        let kp = KernelParams::new(m, l).unwrap();
        let (t, s) = (t * l, s * l);
        let eps = 1e-12;
        let g0 = green_g0(t, s, l).unwrap();
        let g0tt = green_g0(t, t, l).unwrap();
        prop_assert!(g0 >= 0.0 && g0 <= g0tt * (1.0 + eps) && g0tt <= 0.25 * l * (1.0 + eps));
        let mu = m.sqrt();
        let gm = green_gm(t, s, &kp).unwrap();
        let gtt = green_gm(t, t, &kp).unwrap();
        let gss = green_gm(s, s, &kp).unwrap();
        let low = if mu * l > 700.0 { 0.0 } else { mu / (mu * l).sinh() * gtt * gss };
        prop_assert!(low <= gm * (1.0 + eps) + 1e-300, "{low} > {gm}");
        prop_assert!(gm <= gtt * (1.0 + eps));
        prop_assert!(gtt <= (0.5 * mu * l).tanh() / (2.0 * mu) * (1.0 + eps));
    }

    #[test]
    fn kernels_stay_finite(l in 0.1..100.0f64, w in 0.0..700.0f64, t in 0.0..=1.0f64, s in 0.0..=1.0f64) {
        let kp = KernelParams::new((w.max(1e-8) / l).powi(2), l).unwrap();
        let (t, s) = (t * l, s * l);
        for v in [green_gm(t, s, &kp).unwrap(), green_g(t, s, &kp).unwrap(), psi(t, &kp).unwrap(), zeta(&kp)] {
            prop_assert!(v.is_finite());
        }
    }
}

#[test]
fn factorisation_through_quadrature() {
    for w in [0.1, 2.0, 30.0] {
        let l = 1.7;
        let kp = KernelParams::new((w / l) * (w / l), l).unwrap();
        for (x, s) in [(0.3, 1.1), (0.85, 0.85), (1.6, 0.05)] {
            let direct = green_g(x, s, &kp).unwrap();
            let quad = piecewise(0.0, l, &[x, s], 4000, |t| green_g0(x, t, l).unwrap() * green_gm(t, s, &kp).unwrap());
            assert!((direct - quad).abs() <= 1e-9 * direct.abs().max(1e-12), "w={w}: {direct} vs {quad}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_integrals_match_quadrature(l in 0.3..5.0f64, w in 0.01..40.0f64, x in 0.0..=1.0f64) {
        let kp = KernelParams::new((w / l).powi(2), l).unwrap();
        let x = x * l;
        let p = psi(x, &kp).unwrap();
        let quad = piecewise(0.0, l, &[x], 4000, |s| green_g(x, s, &kp).unwrap());
        prop_assert!((p - quad).abs() <= 1e-8 * p.abs().max(1e-300) + 1e-300, "{p} vs {quad}");
        let z = zeta(&kp);
        let quad = simpson_fn(0.0, l, 4000, |s| psi(s, &kp).unwrap());
        prop_assert!((z - quad).abs() <= 1e-8 * z.abs(), "{z} vs {quad}");
    }

    #[test]
    fn closed_form_matches_all_quadrature(
        (m, l) in (0.01..20.0f64, 0.5..4.0f64),
        nfrac in -0.5..1.0f64,
        load in analytic_load(),
        xi in 1usize..20,
    ) {
        let rhs = check_positivity(m, 0.0, l).unwrap().rhs;
        let p = LinearProblem::new(m, nfrac * rhs, l, load).unwrap();
        let sol = solve_linear(&p, 41).unwrap();
        let kp = p.kernel().unwrap();
        let x = sol.grid.x(2 * xi);
        // numeric route with every load term integrated by quadrature
        let sampled = |x: f64| p.load.eval(x, l);
        let y0 = piecewise(0.0, l, &[x], 4000, |s| green_g(x, s, &kp).unwrap() * sampled(s));
        let lambda = simpson_fn(0.0, l, 4000, |s| psi(s, &kp).unwrap() * sampled(s));
        let y = y0 - p.n * psi(x, &kp).unwrap() * lambda / (1.0 + p.n * zeta(&kp));
        let scale = sup_norm(&sol.y).max(1e-300);
        prop_assert!((sol.y[2 * xi] - y).abs() <= 1e-7 * scale, "{} vs {y}", sol.y[2 * xi]);
        // the library's own quadrature helpers agree as well
        let lm = load_moment_g(&p).unwrap();
        prop_assert!((lm - lambda).abs() <= 1e-8 * lambda.abs().max(1e-12));
        let gp = gp_convolution(x, &p).unwrap();
        prop_assert!((gp - y0).abs() <= 1e-8 * scale.max(y0.abs()));
    }

    #[test]
    fn deflection_recovered_from_curvature(
        (m, l) in (0.01..50.0f64, 0.5..6.0f64),
        nfrac in 0.0..1.0f64,
        load in nonnegative_load(),
        xi in 1usize..500,
    ) {
        let rhs = check_positivity(m, 0.0, l).unwrap().rhs;
        let p = LinearProblem::new(m, nfrac * rhs, l, load).unwrap();
        let sol = solve_linear(&p, 1001).unwrap();
        let h = sol.grid.step();
        let i = 2 * xi.min(499);
        let x = sol.grid.x(i);
        let f: Vec<f64> = (0..sol.y.len()).map(|j| -green_g0(x, sol.grid.x(j), l).unwrap() * sol.ypp[j]).collect();
        let y = simpson(&f[..=i], h) + simpson(&f[i..], h);
        prop_assert!((y - sol.y[i]).abs() <= 1e-6 * sup_norm(&sol.y), "{y} vs {}", sol.y[i]);
    }

    #[test]
    fn picard_converges_geometrically(
        (m, l) in (0.01..10.0f64, 0.5..3.0f64),
        load in nonnegative_load(),
        frac in -0.9..0.9f64,
    ) {
        let kp = KernelParams::new(m, l).unwrap();
        let n = frac / zeta(&kp);
        let p = LinearProblem::new(m, n, l, load).unwrap();
        let exact = solve_linear(&p, 101).unwrap();
        let errs: Vec<f64> = (1..6).map(|k| sup_diff(&picard_iterate(&p, k, 101).unwrap().y, &exact.y)).collect();
        let scale = sup_norm(&exact.y);
        for w in errs.windows(2) {
            if w[0] > 1e-12 * scale {
                prop_assert!(w[1] <= frac.abs() * w[0] * (1.0 + 1e-6) + 1e-14 * scale, "{errs:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn positivity_forms_agree(m in 1e-4..1e3f64, l in 0.1..50.0f64) {
        let w = m.sqrt() * l;
        let s = sigma(w).unwrap();
        let a = 4.0 * m / l.powi(3) * s;
        let b = 4.0 / l.powi(5) * w * w * s;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        let r = check_positivity(m, 0.0, l).unwrap();
        prop_assert!((r.rhs - a).abs() <= 1e-12 * a);
    }

    #[test]
    fn sine_uniqueness_matches_general_form(
        a in 1e-3..2.0f64, b in 0.0..2.0f64, c in 0.0..2.0f64, l in 0.3..4.0f64, lambda in 0.0..2.0f64,
    ) {
        let sc = check_sine_conditions(a, b, c, l, lambda).unwrap();
        let general = check_uniqueness(a, b, c, sc.m, sc.n, l, 0.0).unwrap();
        let gap = (sc.uniqueness.lhs - sc.uniqueness.rhs).abs() / sc.uniqueness.rhs.abs().max(1e-300);
        prop_assume!(gap > 1e-9);
        prop_assert_eq!(sc.uniqueness.satisfied, general.satisfied);
    }

    #[test]
    fn key_condition_forms_agree(
        l in 50.0..600.0f64, n in 0.05..0.25f64, ei in 1e7..1e9f64, ec_ac in 1e6..1e8f64, h in 1e3..1e5f64,
    ) {
        let bp = BridgeParams {
            span: l, ei, ec_ac, sag_ratio: Some(n), horizontal_tension: Some(h),
            dead_load: None, cable_length: None, lambda_override: None,
        };
        let r = applicability(&bp).unwrap();
        let k = &r.key_condition;
        prop_assume!((k.lhs - k.rhs).abs() > 1e-9 * k.rhs.abs());
        prop_assert_eq!(k.satisfied, r.key_condition_b_form.satisfied);
        let co = derive_coefficients(&bp).unwrap();
        prop_assert_eq!(co.c, co.q_over_h * co.b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn maximum_principle(
        (m, l) in (0.01..50.0f64, 0.5..10.0f64),
        nfrac in 0.0..=1.0f64,
        loads in prop::collection::vec(nonnegative_load(), 5),
    ) {
        let rhs = check_positivity(m, 0.0, l).unwrap().rhs;
        for load in loads {
            let p = LinearProblem::new(m, nfrac * rhs, l, load).unwrap();
            let sol = solve_linear(&p, 401).unwrap();
            let min_y = sol.y.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_pp = sol.ypp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min_y >= -1e-10 * sup_norm(&sol.y));
            prop_assert!(max_pp <= 1e-10 * sup_norm(&sol.ypp));
        }
    }
}

/// A certified sine-pair problem with a load strictly inside the envelope.
fn certified_problem() -> impl Strategy<Value = (MelanProblem, f64)> {
    (0.01..1.0f64, 0.001..0.3f64, 0.0..0.3f64, 0.5..3.0f64, 0.05..1.0f64, 0.1..0.95f64, 0.0..1.0f64).prop_map(
        |(a, b, c, l, lambda, frac, split)| {
            let k = (PI / l).powi(2);
            let amp = lambda * k * k + a * lambda * k + 2.0 * b * lambda * lambda * PI / l;
            let base = 2.0 * lambda * c * l / PI;
            let load = LoadSpec::new(vec![
                LoadTerm::SineHalfWave { amplitude: frac * amp },
                LoadTerm::Constant { value: frac * split * base },
            ])
            .unwrap();
            (MelanProblem::new(a, b, c, l, load).unwrap(), lambda)
        },
    )
    .prop_filter("maximum principle for the sine pair", |(p, lambda)| {
        check_sine_conditions(p.a, p.b, p.c, p.l, *lambda).unwrap().existence.satisfied
    })
}

fn converge(problem: &MelanProblem, lambda: f64, points: usize) -> melan_core::MonotoneRun {
    let pair = make_sine_pair(problem, lambda, points).unwrap();
    let opts = MonotoneOptions { max_iter: 200, tol: Some(1e-11), ..MonotoneOptions::default() };
    run_monotone(problem, &pair, &opts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chain_and_gap_bound((problem, lambda) in certified_problem()) {
        let pair = make_sine_pair(&problem, lambda, 201).unwrap();
        let opts = MonotoneOptions { max_iter: 40, tol: Some(1e-12), force: false, require_convergence: false };
        let run = run_monotone(&problem, &pair, &opts).unwrap();
        let (lo, hi) = (&run.lower.iterates, &run.upper.iterates);
        let sy = hi.iter().chain(lo).map(|c| sup_norm(&c.y)).fold(0.0, f64::max) * 1e-9;
        let sp = hi.iter().chain(lo).map(|c| sup_norm(&c.ypp)).fold(0.0, f64::max) * 1e-9;
        for n in 1..lo.len() {
            for i in 0..lo[n].len() {
                prop_assert!(lo[n - 1].y[i] <= lo[n].y[i] + sy && lo[n].y[i] <= hi[n].y[i] + sy);
                prop_assert!(hi[n].y[i] <= hi[n - 1].y[i] + sy);
                prop_assert!(lo[n - 1].ypp[i] + sp >= lo[n].ypp[i] && lo[n].ypp[i] + sp >= hi[n].ypp[i]);
                prop_assert!(hi[n].ypp[i] + sp >= hi[n - 1].ypp[i]);
            }
            if run.verdict.rho < 1.0 {
                prop_assert!(run.verdict.gaps[n] <= run.verdict.bounds[n] * (1.0 + 1e-9) + 1e-15);
            }
        }
    }

    #[test]
    fn converged_iterates_solve_the_equation((problem, lambda) in certified_problem()) {
        let run = converge(&problem, lambda, 2001);
        let grid = UniformGrid::odd(problem.l, 2001).unwrap();
        for c in [run.lower.last(), run.upper.last()] {
            prop_assert!(nonlinear_residual(c, &problem, &grid) < 1e-4);
            let scale_pp = sup_norm(&c.ypp);
            prop_assert!(c.y.iter().all(|v| *v >= 0.0));
            prop_assert!(c.ypp.iter().all(|v| *v <= 1e-10 * scale_pp));
        }
    }

    #[test]
    fn any_start_in_the_bracket_converges(
        (problem, lambda) in certified_problem(),
        picks in prop::collection::vec((0usize..6, 0.0..=1.0f64), 3),
    ) {
        let run = converge(&problem, lambda, 201);
        prop_assume!(run.verdict.uniqueness.satisfied);
        let pair = make_sine_pair(&problem, lambda, 201).unwrap();
        let limit = run.lower.last();
        let tol = 1e-11;
        for (k, t) in picks {
            let lo = &run.lower.iterates[k.min(run.lower.iterates.len() - 1)];
            let hi = &run.upper.iterates[k.min(run.upper.iterates.len() - 1)];
            let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect::<Vec<_>>();
            let start = Curve {
                y: mix(&lo.y, &hi.y),
                ypp: mix(&lo.ypp, &hi.ypp),
                integral: t * lo.integral + (1.0 - t) * hi.integral,
            };
            let seq = iterate_from(start, &pair, &problem, 400, tol).unwrap();
            let end = seq.last().unwrap();
            prop_assert!(sup_diff(&end.y, &limit.y) <= 10.0 * tol.max(1e-11 * sup_norm(&limit.y)) + 1e-10 * sup_norm(&limit.y));
        }
    }
}

fn bridge() -> impl Strategy<Value = BridgeParams> {
    (60.0..300.0f64, 1.0 / 14.0..0.2f64, 1e8..1e9f64, 1e6..1e7f64, 5e3..5e4f64).prop_map(|(l, n, ei, ec_ac, h)| {
        BridgeParams {
            span: l,
            ei,
            ec_ac,
            sag_ratio: Some(n),
            horizontal_tension: Some(h),
            dead_load: None,
            cable_length: None,
            lambda_override: None,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn envelope_implies_upper_solution(bp in bridge(), frac in 0.0..0.999f64, samples in prop::collection::vec(0.0..1.0f64, 3..20)) {
        let (a, b) = load_envelope(&bp).unwrap();
        let l = bp.span;
        let values: Vec<f64> = samples.iter().enumerate().map(|(i, s)| {
            let x = l * i as f64 / (samples.len() - 1) as f64;
            frac * s * (a * (PI * x / l).sin() + b)
        }).collect();
        let load = LoadSpec::new(vec![LoadTerm::Sampled { values }]).unwrap();
        prop_assume!(check_envelope(&bp, &load).unwrap().holds);
        let co = derive_coefficients(&bp).unwrap();
        let problem = MelanProblem::new(co.a, co.b, co.c, l, load.scaled(1.0 / bp.ei)).unwrap();
        let v = verify_upper(&Candidate::Sine { lambda: l / 100.0 }, &problem, 1001).unwrap();
        prop_assert!(v.holds, "{v:?}");
    }

    #[test]
    fn certified_deflection_stays_in_the_bracket(frac in 0.05..0.95f64) {
        let bp = BridgeParams {
            span: 100.0, ei: 4.557e8, ec_ac: 4.121_73e6, sag_ratio: Some(1.0 / 9.0),
            horizontal_tension: Some(19_850.4), dead_load: None, cable_length: Some(103.2), lambda_override: None,
        };
        let (a, b) = load_envelope(&bp).unwrap();
        let load = LoadSpec::new(vec![
            LoadTerm::Constant { value: frac * b },
            LoadTerm::SineHalfWave { amplitude: frac * a },
        ]).unwrap();
        let s = solve_bridge(&bp, &load, 201, &MonotoneOptions::default()).unwrap();
        let cap = bp.span / 100.0;
        prop_assert!(s.deflection.y.iter().all(|v| *v >= 0.0 && *v <= cap * (1.0 + 1e-9)));
        prop_assert!(s.h_w >= 0.0);
    }
}
