//! Finite-difference reference solvers, independent of the kernel formulas.
//!
//! Five-point fourth difference, three-point second difference, trapezoid
//! rule for `∫y`. The hinged ends are imposed by `y = 0` rows and one-sided
//! second differences `2y_0 - 5y_1 + 4y_2 - y_3 = 0`, which keeps the matrix
//! banded; the integral couples every unknown, so it is carried as a
//! rank-one correction on top of a banded LU factorisation.

use crate::error::{MelanError, Result};
use crate::linear::{GridSolution, LinearProblem, SolutionMeta};
use crate::monotone::MelanProblem;
use crate::quadrature::UniformGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub points: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub damping: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { points: 2001, newton_tol: 1e-8, newton_max: 100, damping: 0.8 }
    }
}

impl FdConfig {
    pub fn with_points(points: usize) -> Self {
        Self { points, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.points < 101 || self.points % 2 == 0 {
            return Err(MelanError::InvalidGrid(format!(
                "finite-difference grids need an odd count >= 101, got {}",
                self.points
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(MelanError::Domain(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max == 0 {
            return Err(MelanError::Domain("Newton tolerance and cap must be positive".into()));
        }
        Ok(())
    }
}

/// Banded matrix with room for the fill-in of partial pivoting.
struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl Banded {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width], piv: vec![0; n] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, reach) = (self.n, self.kl, self.ku + self.kl);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let p = (k..=last)
                .max_by(|&a, &b| self.get(a, k).abs().total_cmp(&self.get(b, k).abs()))
                .unwrap_or(k);
            let pivot = self.get(p, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(MelanError::SingularSystem(k));
            }
            self.piv[k] = p;
            let right = (k + reach).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            for i in k + 1..=last {
                let f = self.get(i, k) / pivot;
                self.set(i, k, f);
                if f != 0.0 {
                    for j in k + 1..=right {
                        let v = self.get(i, j) - f * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
        Ok(())
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, kl, reach) = (self.n, self.kl, self.ku + self.kl);
        let mut b = rhs.to_vec();
        for k in 0..n {
            b.swap(k, self.piv[k]);
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.get(i, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
        b
    }
}

/// Trapezoid weights on the `y` slots of the interleaved unknown vector.
fn trapezoid_weights(nodes: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; 2 * nodes];
    for i in 0..nodes {
        w[2 * i] = if i == 0 || i == nodes - 1 { 0.5 * h } else { h };
    }
    w
}

/// `D4 - k D2` written as two second-order stencils, unknowns interleaved as
/// `(y_0, v_0, y_1, v_1, ...)` with `v_i = D2 y_i` at interior nodes. Every
/// row is scaled by `h^2`. The end rows are `y = 0`, a dummy `v = 0` and the
/// one-sided second difference. Eliminating `v` gives back the five-point
/// fourth difference, while the conditioning grows like `h^-2`, not `h^-4`.
fn operator(nodes: usize, h: f64, k: f64) -> Banded {
    let m = nodes - 1;
    let (y, v) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
    let mut a = Banded::new(2 * nodes, 4, 4);
    let h2 = h * h;
    let vdef = |a: &mut Banded, row: usize, i: usize| {
        a.set(row, v(i), h2);
        a.set(row, y(i - 1), -1.0);
        a.set(row, y(i), 2.0);
        a.set(row, y(i + 1), -1.0);
    };
    a.set(0, y(0), 1.0);
    a.set(1, v(0), 1.0);
    vdef(&mut a, 2, 1);
    for (j, c) in [2.0, -5.0, 4.0, -1.0].into_iter().enumerate() {
        a.set(3, y(j), c);
        a.set(2 * m - 2, y(m - j), c);
    }
    for i in 2..=m - 2 {
        vdef(&mut a, 2 * i, i);
        a.set(2 * i + 1, v(i - 1), 1.0);
        a.set(2 * i + 1, v(i), -2.0 - k * h2);
        a.set(2 * i + 1, v(i + 1), 1.0);
    }
    vdef(&mut a, 2 * m - 1, m - 1);
    a.set(2 * m, y(m), 1.0);
    a.set(2 * m + 1, v(m), 1.0);
    a
}

/// Solves `(A + u w^T) x = r` given the factorised `A`.
fn sherman_morrison(a: &Banded, u: &[f64], w: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let z = a.solve(r);
    let v = a.solve(u);
    let wz: f64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
    let wv: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
    let denom = 1.0 + wv;
    if denom.abs() < 1e-14 {
        return Err(MelanError::SingularSystem(a.n));
    }
    Ok(z.iter().zip(&v).map(|(zi, vi)| zi - vi * wz / denom).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn finish(z: &[f64], grid: UniformGrid, m: f64, n: f64, w: &[f64]) -> GridSolution {
    let len = grid.len();
    let y: Vec<f64> = (0..len).map(|i| z[2 * i]).collect();
    let mut ypp: Vec<f64> = (0..len).map(|i| z[2 * i + 1]).collect();
    ypp[0] = 0.0;
    ypp[len - 1] = 0.0;
    GridSolution {
        meta: SolutionMeta { m, n, l: grid.span(), points: len, outside_corollary: n < 0.0 },
        integral_y: dot(w, z),
        grid,
        y,
        ypp,
    }
}

/// Finite-difference solution of the linear nonlocal problem.
pub fn fd_solve_linear(problem: &LinearProblem, cfg: &FdConfig) -> Result<GridSolution> {
    cfg.validate()?;
    problem.validate()?;
    let grid = UniformGrid::odd(problem.l, cfg.points)?;
    let n = grid.len();
    let h2 = grid.step().powi(2);
    let nodes = grid.nodes();
    let mut a = operator(n, grid.step(), problem.m);
    a.factor()?;
    let w = trapezoid_weights(n, grid.step());
    let mut rhs = vec![0.0; 2 * n];
    let mut u = vec![0.0; 2 * n];
    for i in 2..=n - 3 {
        rhs[2 * i + 1] = h2 * problem.load.eval(nodes[i], problem.l);
        u[2 * i + 1] = h2 * problem.n;
    }
    let z = sherman_morrison(&a, &u, &w, &rhs)?;
    Ok(finish(&z, grid, problem.m, problem.n, &w))
}

/// Damped Newton iteration for the nonlinear problem, starting from
/// `initial` or from the linear solution with `(M, N) = (a, c)`.
pub fn fd_solve_nonlinear(problem: &MelanProblem, cfg: &FdConfig, initial: Option<&[f64]>) -> Result<GridSolution> {
    cfg.validate()?;
    problem.validate()?;
    let grid = UniformGrid::odd(problem.l, cfg.points)?;
    let n = grid.len();
    let h = grid.step();
    let h2 = h * h;
    let nodes = grid.nodes();
    let w = trapezoid_weights(n, h);
    let p: Vec<f64> = nodes.iter().map(|&x| problem.load.eval(x, problem.l)).collect();

    let mut z = vec![0.0; 2 * n];
    match initial {
        Some(y0) if y0.len() == n => {
            for i in 0..n {
                z[2 * i] = y0[i];
            }
            for i in 1..n - 1 {
                z[2 * i + 1] = (y0[i - 1] - 2.0 * y0[i] + y0[i + 1]) / h2;
            }
        }
        Some(y0) => {
            return Err(MelanError::InvalidGrid(format!("initial guess has {} points, grid has {n}", y0.len())))
        }
        None => {
            let lin = LinearProblem { m: problem.a, n: problem.c, l: problem.l, load: problem.load.clone() };
            let s = fd_solve_linear(&lin, cfg)?;
            for i in 0..n {
                z[2 * i] = s.y[i];
                z[2 * i + 1] = s.ypp[i];
            }
        }
    }

    let mut last = f64::INFINITY;
    for _ in 0..cfg.newton_max {
        // Newton written for the new iterate: with J = D4 - (a + bT) D2 +
        // (c - b y'') w^T, J y_new = p - b T y''. Solving for y_new instead
        // of the correction avoids differencing a residual at rounding level.
        let t = dot(&w, &z);
        let mut jac = operator(n, h, problem.a + problem.b * t);
        jac.factor()?;
        let mut u = vec![0.0; 2 * n];
        let mut rhs = vec![0.0; 2 * n];
        for i in 2..=n - 3 {
            let ypp = z[2 * i + 1];
            u[2 * i + 1] = h2 * (problem.c - problem.b * ypp);
            rhs[2 * i + 1] = h2 * (p[i] - problem.b * t * ypp);
        }
        let next = sherman_morrison(&jac, &u, &w, &rhs)?;
        let step = (0..n).map(|i| (next[2 * i] - z[2 * i]).abs()).fold(0.0, f64::max);
        for (zi, ni) in z.iter_mut().zip(&next) {
            *zi += cfg.damping * (ni - *zi);
        }
        last = step;
        let size = (0..n).map(|i| z[2 * i].abs()).fold(0.0, f64::max);
        if step <= cfg.newton_tol * size {
            let t = dot(&w, &z);
            return Ok(finish(&z, grid, problem.a + problem.b * t, problem.c, &w));
        }
    }
    Err(MelanError::NewtonDiverged { iterations: cfg.newton_max, residual: last })
}
