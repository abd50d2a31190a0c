//! Exact solution of the linear nonlocal beam problem
//!
//! ```text
//! y'''' - M y'' + N ∫_0^L y dx = p(x),   y = y'' = 0 at x = 0 and x = L.
//! ```
//!
//! The solution is `y = y0 - N Ψ Λ / (1 + N ζ)` with `y0 = ∫ G(x, s) p(s) ds`,
//! `Λ = ∫ y0`, and the curvature comes from the matching closed formula, never
//! from differencing `y`.
//!
//! `y0` is assembled from `u = ∫ GM(x, s) p(s) ds` (so that `y0'' = -u`):
//!
//! * polynomial, sine and hyperbolic-sine terms are solved in closed form
//!   (polynomials switch to a Neumann series in `M L^2` when `mu L < 1`);
//! * sampled terms go through an `O(m)` recursive factorisation of `GM`
//!   and cumulative fourth-order rules for the outer `G0` convolution.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{MelanError, Result};
use crate::kernel::{
    gm_row_integral, green_g_unchecked, psi_unchecked, sinh_fraction, sinhc_m1, tanh_defect, zeta,
    KernelParams,
};
use crate::load::{LoadSpec, LoadTerm};
use crate::quadrature::{cumulative, interpolate, interval_rule, simpson, simpson_fn, UniformGrid};

/// Default number of grid nodes.
pub const DEFAULT_POINTS: usize = 1001;

/// `|1 + N ζ|` below this is treated as a singular solution formula.
pub const RESONANCE_THRESHOLD: f64 = 1e-12;

/// Relative distance `|rate - mu| / mu` under which a hyperbolic-sine load
/// is integrated numerically instead of through its closed form.
const SINH_RESONANCE_GAP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProblem {
    pub m: f64,
    pub n: f64,
    pub l: f64,
    pub load: LoadSpec,
}

impl LinearProblem {
    pub fn new(m: f64, n: f64, l: f64, load: LoadSpec) -> Result<Self> {
        let p = Self { m, n, l, load };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_finite() {
            return Err(MelanError::Domain(format!("N must be finite, got {}", self.n)));
        }
        KernelParams::new(self.m, self.l)?;
        self.load.validate(self.l)
    }

    pub fn kernel(&self) -> Result<KernelParams> {
        KernelParams::new(self.m, self.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionMeta {
    pub m: f64,
    pub n: f64,
    pub l: f64,
    pub points: usize,
    /// `N < 0`: the formula still applies when `1 + N ζ != 0`, but the
    /// unconditional well-posedness result covers only `N > 0`.
    pub outside_corollary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub grid: UniformGrid,
    pub y: Vec<f64>,
    pub ypp: Vec<f64>,
    pub integral_y: f64,
    pub meta: SolutionMeta,
}

impl GridSolution {
    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// Position and value of the sample with the largest `|y|`.
    pub fn max_abs(&self) -> (f64, f64) {
        let (i, v) = self
            .y
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |(bi, bv), (i, &v)| if v.abs() > bv.abs() { (i, v) } else { (bi, bv) });
        (self.grid.x(i), v)
    }
}

/// `y0`, `u = -y0''` on a grid, plus `Λ = ∫ y0`.
#[derive(Debug, Clone)]
pub(crate) struct Response {
    pub y0: Vec<f64>,
    pub u: Vec<f64>,
    pub lambda: f64,
}

/// Polynomial part `c0 + c1 x + c2 x^2 + c3 x^3`.
#[derive(Debug, Clone)]
enum PolyPart {
    Zero,
    Closed([f64; 4]),
    /// Coefficients (in `t = x / L`) of `u / L^2` and `y0 / L^4`.
    Series { u: Vec<f64>, y: Vec<f64> },
}

/// Closed-form response of every analytic term of a load.
#[derive(Debug, Clone)]
struct Analytic {
    kp: KernelParams,
    poly: PolyPart,
    sine: f64,
    sinh: Vec<(f64, f64)>,
}

/// Terms that have to be integrated numerically.
enum Numeric<'a> {
    Samples(&'a [f64]),
    Sinh(f64, f64),
}

impl Numeric<'_> {
    fn eval(&self, x: f64, l: f64) -> f64 {
        match self {
            Numeric::Samples(v) => interpolate(v, l, x),
            Numeric::Sinh(c, r) => c * (r * x).sinh(),
        }
    }

    /// Node count used when the term has to be integrated on its own.
    fn resolution(&self) -> usize {
        match self {
            Numeric::Samples(v) => (2 * v.len() + 1).max(1001),
            Numeric::Sinh(..) => 2001,
        }
    }
}

fn split_load<'a>(kp: &KernelParams, load: &'a LoadSpec) -> (Analytic, Vec<Numeric<'a>>) {
    let mut poly = [0.0; 4];
    let mut sine = 0.0;
    let mut sinh = Vec::new();
    let mut numeric = Vec::new();
    for term in load.terms() {
        match term {
            LoadTerm::Constant { value } => poly[0] += value,
            LoadTerm::Affine { c0, c1 } => {
                poly[0] += c0;
                poly[1] += c1;
            }
            LoadTerm::Cubic { c3 } => poly[3] += c3,
            LoadTerm::SineHalfWave { amplitude } => sine += amplitude,
            LoadTerm::SinhTerm { coef, rate } => {
                // sinh is odd: fold negative rates into the coefficient
                let (c, r) = if *rate < 0.0 { (-coef, -rate) } else { (*coef, *rate) };
                if r == 0.0 || c == 0.0 {
                    continue;
                }
                if (r - kp.mu()).abs() < SINH_RESONANCE_GAP * kp.mu() {
                    numeric.push(Numeric::Sinh(c, r));
                } else {
                    sinh.push((c, r));
                }
            }
            LoadTerm::Sampled { values } => numeric.push(Numeric::Samples(values)),
        }
    }
    let poly = if poly.iter().all(|&c| c == 0.0) {
        PolyPart::Zero
    } else if kp.mu_l() < 1.0 {
        poly_series(kp, &poly)
    } else {
        PolyPart::Closed(poly)
    };
    (Analytic { kp: *kp, poly, sine, sinh }, numeric)
}

/// Solution operator of `-z'' = q` on `[0, 1]` with `z(0) = z(1) = 0`,
/// acting on monomial coefficients.
fn invert_second_difference(q: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; q.len() + 2];
    let mut slope = 0.0;
    for (j, &qj) in q.iter().enumerate() {
        let d = ((j + 1) * (j + 2)) as f64;
        z[j + 2] = -qj / d;
        slope += qj / d;
    }
    z[1] = slope;
    z
}

fn coeff_norm(c: &[f64]) -> f64 {
    c.iter().map(|v| v.abs()).sum()
}

fn add_into(acc: &mut Vec<f64>, term: &[f64]) {
    if acc.len() < term.len() {
        acc.resize(term.len(), 0.0);
    }
    for (a, t) in acc.iter_mut().zip(term) {
        *a += t;
    }
}

/// `GM = Σ (-M)^k G0^{k+1}` expanded on the unit interval; converges like
/// `(M L^2 / pi^2)^k`, so for `mu L < 1` every step gains a digit.
fn poly_series(kp: &KernelParams, c: &[f64; 4]) -> PolyPart {
    let l = kp.l();
    let eps = kp.m() * l * l;
    let scaled: Vec<f64> = c.iter().enumerate().map(|(j, cj)| cj * l.powi(j as i32)).collect();
    let mut u = Vec::new();
    let mut y = Vec::new();
    let mut cur = invert_second_difference(&scaled);
    for _ in 0..120 {
        add_into(&mut u, &cur);
        let next = invert_second_difference(&cur);
        add_into(&mut y, &next);
        let small = coeff_norm(&cur) <= 1e-18 * coeff_norm(&u) && coeff_norm(&next) <= 1e-18 * coeff_norm(&y);
        cur = next.iter().map(|v| -eps * v).collect();
        if small {
            break;
        }
    }
    PolyPart::Series { u, y }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

/// `g(κ, x) = (sinh(κ x) / sinh(κ L) - x / L) / κ^2`.
fn sinh_profile(kappa: f64, x: f64, l: f64) -> f64 {
    let w = kappa * l;
    if w < 1.0 {
        let tw = sinhc_m1(w);
        (x / l) * (sinhc_m1(kappa * x) - tw) / ((1.0 + tw) * kappa * kappa)
    } else {
        (sinh_fraction(kappa * x, w) - x / l) / (kappa * kappa)
    }
}

/// `∫_0^L g(κ, x) dx = -L^3 (w/2 - tanh(w/2)) / w^3` with `w = κ L`.
fn sinh_profile_integral(kappa: f64, l: f64) -> f64 {
    let w = kappa * l;
    -l * l * l * tanh_defect(0.5 * w) / (w * w * w)
}

impl Analytic {
    /// `(y0(x), u(x))`.
    fn eval(&self, x: f64) -> (f64, f64) {
        let kp = &self.kp;
        let (m, l, mu, w) = (kp.m(), kp.l(), kp.mu(), kp.mu_l());
        let mut y0 = 0.0;
        let mut u = 0.0;
        match &self.poly {
            PolyPart::Zero => {}
            PolyPart::Closed(c) => {
                let p = |x: f64| horner(c, x);
                let pdd = |x: f64| 2.0 * c[2] + 6.0 * c[3] * x;
                let up = |x: f64| p(x) / m + pdd(x) / (m * m);
                let uu = up(x) - up(0.0) * sinh_fraction(mu * (l - x), w) - up(l) * sinh_fraction(mu * x, w);
                let slope: f64 = (0..4).map(|j| c[j] * l.powi(j as i32 + 1) / ((j + 1) * (j + 2)) as f64).sum();
                let z0: f64 = slope * x
                    - (0..4).map(|j| c[j] * x.powi(j as i32 + 2) / ((j + 1) * (j + 2)) as f64).sum::<f64>();
                u += uu;
                y0 += (z0 - uu) / m;
            }
            PolyPart::Series { u: cu, y: cy } => {
                let t = x / l;
                u += l * l * horner(cu, t);
                y0 += l * l * l * l * horner(cy, t);
            }
        }
        if self.sine != 0.0 {
            let k = (PI / l).powi(2);
            let s = self.sine * (PI * x / l).sin();
            u += s / (m + k);
            y0 += s / (k * (m + k));
        }
        for &(c, r) in &self.sinh {
            let d = m - r * r;
            let big = (r * l).sinh();
            y0 += c * big * (sinh_profile(mu, x, l) - sinh_profile(r, x, l)) / d;
            u += c * ((r * x).sinh() - big * sinh_fraction(mu * x, w)) / d;
        }
        (y0, u)
    }

    /// `Λ = ∫ y0` over the analytic terms.
    fn lambda(&self) -> f64 {
        let kp = &self.kp;
        let (m, l, mu) = (kp.m(), kp.l(), kp.mu());
        let mut total = 0.0;
        match &self.poly {
            PolyPart::Zero => {}
            PolyPart::Closed(c) => {
                let up = |x: f64| horner(c, x) / m + (2.0 * c[2] + 6.0 * c[3] * x) / (m * m);
                let int_up: f64 = (0..4).map(|j| c[j] * l.powi(j as i32 + 1) / (j + 1) as f64).sum::<f64>() / m
                    + (2.0 * c[2] * l + 3.0 * c[3] * l * l) / (m * m);
                let int_u = int_up - (up(0.0) + up(l)) * (0.5 * kp.mu_l()).tanh() / mu;
                let slope: f64 = (0..4).map(|j| c[j] * l.powi(j as i32 + 1) / ((j + 1) * (j + 2)) as f64).sum();
                let int_z0 = slope * l * l / 2.0
                    - (0..4)
                        .map(|j| c[j] * l.powi(j as i32 + 3) / ((j + 1) * (j + 2) * (j + 3)) as f64)
                        .sum::<f64>();
                total += (int_z0 - int_u) / m;
            }
            PolyPart::Series { y, .. } => {
                let int: f64 = y.iter().enumerate().map(|(j, v)| v / (j + 1) as f64).sum();
                total += l.powi(5) * int;
            }
        }
        if self.sine != 0.0 {
            let k = (PI / l).powi(2);
            total += self.sine * (2.0 * l / PI) / (k * (m + k));
        }
        for &(c, r) in &self.sinh {
            let d = m - r * r;
            total += c * (r * l).sinh() * (sinh_profile_integral(mu, l) - sinh_profile_integral(r, l)) / d;
        }
        total
    }
}

/// `u = ∫ GM(x, s) p(s) ds` and `y0 = ∫ G0(x, t) u(t) dt` for loads given
/// at the grid nodes.
///
/// `GM` factorises into `sinh(mu min) sinh(mu (L - max))`, so the inner
/// integral splits into two running integrals, each updated interval by
/// interval with an exponential decay factor.
fn sampled_response(kp: &KernelParams, grid: &UniformGrid, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let h = grid.step();
    let mu = kp.mu();
    let w = kp.mu_l();
    let l = kp.l();
    let x = grid.nodes();

    // e^{-mu xref} sinh(mu xj) / mu
    let scaled_sinh = |xj: f64, xref: f64| -> f64 {
        let z = mu * xj;
        if z < 1.0 {
            xj * (1.0 + sinhc_m1(z)) * (-mu * xref).exp()
        } else {
            ((mu * (xj - xref)).exp() - (-mu * (xj + xref)).exp()) / (2.0 * mu)
        }
    };
    let decay = (-mu * h).exp();
    let running = |vals: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for i in 0..n - 1 {
            let (idx, wts) = interval_rule(i, n);
            let local: f64 = idx
                .iter()
                .zip(wts.iter())
                .map(|(&j, &wj)| if wj == 0.0 { 0.0 } else { wj * scaled_sinh(x[j], x[i + 1]) * vals(j) })
                .sum();
            acc[i + 1] = decay * acc[i] + h * local;
        }
        acc
    };
    let left = running(&|j| p[j]);
    let right_rev = running(&|j| p[n - 1 - j]);

    let denom = -(-2.0 * w).exp_m1();
    let u: Vec<f64> = (0..n)
        .map(|i| {
            let f1 = -(-2.0 * mu * (l - x[i])).exp_m1() / denom;
            let f2 = -(-2.0 * mu * x[i]).exp_m1() / denom;
            f1 * left[i] + f2 * right_rev[n - 1 - i]
        })
        .collect();

    let tu: Vec<f64> = (0..n).map(|i| x[i] * u[i]).collect();
    let su: Vec<f64> = (0..n).map(|i| (l - x[i]) * u[i]).collect();
    let a = cumulative(&tu, h);
    let b = cumulative(&su, h);
    let b_total = b[n - 1];
    let mut y0: Vec<f64> = (0..n).map(|i| ((l - x[i]) * a[i] + x[i] * (b_total - b[i])) / l).collect();
    y0[0] = 0.0;
    y0[n - 1] = 0.0;
    (y0, u)
}

fn resample(values: &[f64], grid: &UniformGrid) -> Vec<f64> {
    if values.len() == grid.len() {
        values.to_vec()
    } else {
        grid.nodes().iter().map(|&x| interpolate(values, grid.span(), x)).collect()
    }
}

/// Adds the response to samples `p` on `grid`, read at every `stride`-th
/// node, and returns their contribution to `Λ`.
fn add_sampled(kp: &KernelParams, grid: &UniformGrid, p: &[f64], stride: usize, y0: &mut [f64], u: &mut [f64]) -> f64 {
    let (sy, su) = sampled_response(kp, grid, p);
    for (i, (y, v)) in y0.iter_mut().zip(u.iter_mut()).enumerate() {
        *y += sy[i * stride];
        *v += su[i * stride];
    }
    let weighted: Vec<f64> = grid.nodes().iter().zip(p).map(|(&x, pi)| psi_unchecked(x, kp) * pi).collect();
    simpson(&weighted, grid.step())
}

/// `y0`, `u` and `Λ` for the whole load on an odd grid.
pub(crate) fn response(kp: &KernelParams, load: &LoadSpec, grid: &UniformGrid) -> Response {
    let (analytic, numeric) = split_load(kp, load);
    let n = grid.len();
    let mut y0 = vec![0.0; n];
    let mut u = vec![0.0; n];
    for (i, x) in grid.nodes().into_iter().enumerate() {
        let (a, b) = analytic.eval(x);
        y0[i] = a;
        u[i] = b;
    }
    let mut lambda = analytic.lambda();
    let (sinh, samples): (Vec<_>, Vec<_>) = numeric.iter().partition(|t| matches!(t, Numeric::Sinh(..)));
    if !samples.is_empty() {
        let mut p = vec![0.0; n];
        for term in &samples {
            if let Numeric::Samples(v) = term {
                for (pi, v) in p.iter_mut().zip(resample(v, grid)) {
                    *pi += v;
                }
            }
        }
        lambda += add_sampled(kp, grid, &p, 1, &mut y0, &mut u);
    }
    if !sinh.is_empty() {
        // near-resonant hyperbolic loads are smooth, so integrate them on a
        // refinement that nests the output nodes
        let k = (2000 / (n - 1)).max(1);
        let fine = UniformGrid::odd(grid.span(), (n - 1) * k + 1).expect("refined grid is odd");
        let p: Vec<f64> =
            fine.nodes().iter().map(|&x| sinh.iter().map(|t| t.eval(x, kp.l())).sum()).collect();
        lambda += add_sampled(kp, &fine, &p, k, &mut y0, &mut u);
    }
    y0[0] = 0.0;
    y0[n - 1] = 0.0;
    u[0] = 0.0;
    u[n - 1] = 0.0;
    Response { y0, u, lambda }
}

/// `Λ = ∫∫ G(x, s) p(s) ds dx = ∫ Ψ(s) p(s) ds`.
pub fn load_moment_g(problem: &LinearProblem) -> Result<f64> {
    problem.validate()?;
    let kp = problem.kernel()?;
    let (analytic, numeric) = split_load(&kp, &problem.load);
    let l = problem.l;
    let mut total = analytic.lambda();
    for term in &numeric {
        total += simpson_fn(0.0, l, term.resolution(), |s| psi_unchecked(s.clamp(0.0, l), &kp) * term.eval(s, l));
    }
    Ok(total)
}

/// `∫ G(x, s) p(s) ds` at a single point.
pub fn gp_convolution(x: f64, problem: &LinearProblem) -> Result<f64> {
    problem.validate()?;
    let kp = problem.kernel()?;
    let l = problem.l;
    if !x.is_finite() || x < -1e-12 * l || x > l * (1.0 + 1e-12) {
        return Err(MelanError::Domain(format!("x = {x} lies outside [0, {l}]")));
    }
    let x = x.clamp(0.0, l);
    let (analytic, numeric) = split_load(&kp, &problem.load);
    let mut total = analytic.eval(x).0;
    for term in &numeric {
        // the kernel has a kink at s = x; integrate each side separately
        let k = term.resolution();
        let f = |s: f64| green_g_unchecked(x, s.clamp(0.0, l), &kp) * term.eval(s, l);
        if x > 0.0 {
            total += simpson_fn(0.0, x, k, f);
        }
        if x < l {
            total += simpson_fn(x, l, k, f);
        }
    }
    Ok(total)
}

fn assemble(problem: &LinearProblem, kp: &KernelParams, grid: UniformGrid, resp: Response, coef: f64) -> GridSolution {
    let n = grid.len();
    let nodes = grid.nodes();
    let mut y = Vec::with_capacity(n);
    let mut ypp = Vec::with_capacity(n);
    for (i, &x) in nodes.iter().enumerate() {
        y.push(resp.y0[i] - coef * psi_unchecked(x, kp));
        let row = gm_row_integral(x, kp).unwrap_or(0.0);
        ypp.push(-resp.u[i] + coef * row);
    }
    y[0] = 0.0;
    y[n - 1] = 0.0;
    ypp[0] = 0.0;
    ypp[n - 1] = 0.0;
    let integral_y = resp.lambda - coef * zeta(kp);
    GridSolution {
        grid,
        y,
        ypp,
        integral_y,
        meta: SolutionMeta {
            m: problem.m,
            n: problem.n,
            l: problem.l,
            points: n,
            outside_corollary: problem.n < 0.0,
        },
    }
}

/// Closed-form solution sampled on `grid_points` (odd, at least 3) nodes.
pub fn solve_linear(problem: &LinearProblem, grid_points: usize) -> Result<GridSolution> {
    problem.validate()?;
    let grid = UniformGrid::odd(problem.l, grid_points)?;
    let kp = problem.kernel()?;
    let z = zeta(&kp);
    let denom = 1.0 + problem.n * z;
    if denom.abs() < RESONANCE_THRESHOLD {
        return Err(MelanError::SingularResonance { value: denom });
    }
    let resp = response(&kp, &problem.load, &grid);
    let coef = problem.n * resp.lambda / denom;
    Ok(assemble(problem, &kp, grid, resp, coef))
}

/// `n`-th partial sum of the Neumann series in `-N ζ` for the nonlocal term,
/// starting from `y0 = ∫ G p`.
pub fn picard_iterate(problem: &LinearProblem, n: usize, grid_points: usize) -> Result<GridSolution> {
    problem.validate()?;
    let grid = UniformGrid::odd(problem.l, grid_points)?;
    let kp = problem.kernel()?;
    let ratio = problem.n * zeta(&kp);
    if ratio.abs() >= 1.0 {
        return Err(MelanError::NotContractive(ratio.abs()));
    }
    let mut partial = 0.0;
    let mut power = 1.0;
    for _ in 0..n {
        partial += power;
        power *= -ratio;
    }
    let resp = response(&kp, &problem.load, &grid);
    let coef = problem.n * resp.lambda * partial;
    Ok(assemble(problem, &kp, grid, resp, coef))
}

/// Fourth-order central second difference at interior node `i`.
pub(crate) fn second_difference(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h)
}

/// Largest scaled pointwise defect of the equation over nodes `2..m-2`.
///
/// The fourth derivative is the second difference of the analytic `y''`;
/// differencing `y` four times would leave only rounding noise on fine grids.
pub fn residual(sol: &GridSolution, problem: &LinearProblem) -> Result<f64> {
    let n = sol.y.len();
    if n < 7 {
        return Err(MelanError::InvalidGrid(format!("residual needs at least 7 points, got {n}")));
    }
    let h = sol.grid.step();
    let nodes = sol.grid.nodes();
    let p = problem.load.sample(&nodes, problem.l);
    let scale = p.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 2..n - 2 {
        let d4 = second_difference(&sol.ypp, i, h);
        let d2 = second_difference(&sol.y, i, h);
        let r = d4 - problem.m * d2 + problem.n * sol.integral_y - p[i];
        worst = worst.max(r.abs());
    }
    Ok(worst / scale)
}
