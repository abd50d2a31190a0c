//! Uniform grids, composite Simpson quadrature and cumulative integration.
//!
//! Everything here works on uniformly spaced samples. Simpson needs an odd
//! number of nodes; the cumulative rules integrate interval by interval
//! with a local cubic interpolant, which keeps them fourth-order accurate
//! on any grid with at least four nodes.

use crate::error::{MelanError, Result};

/// Uniform grid `x_0 = 0, ..., x_{n-1} = span`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    span: f64,
    points: usize,
}

impl UniformGrid {
    pub fn new(span: f64, points: usize) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(MelanError::InvalidGrid(format!("span must be positive, got {span}")));
        }
        if points < 3 {
            return Err(MelanError::InvalidGrid(format!(
                "need at least 3 grid points, got {points}"
            )));
        }
        Ok(Self { span, points })
    }

    /// Same as [`UniformGrid::new`] but also insists on an odd node count.
    pub fn odd(span: f64, points: usize) -> Result<Self> {
        if points % 2 == 0 {
            return Err(MelanError::InvalidGrid(format!(
                "Simpson quadrature needs an odd number of grid points, got {points}"
            )));
        }
        Self::new(span, points)
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.span / (self.points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.span
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }
}

/// Composite Simpson rule over uniformly spaced samples (odd count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1, "simpson needs an odd count >= 3");
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Composite Simpson rule applied to a function on `[lo, hi]` with `n`
/// (odd) nodes.
pub fn simpson_fn<F: FnMut(f64) -> f64>(lo: f64, hi: f64, n: usize, mut f: F) -> f64 {
    let n = if n % 2 == 0 { n + 1 } else { n.max(3) };
    let h = (hi - lo) / (n - 1) as f64;
    let values: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { f(hi) } else { f(lo + i as f64 * h) })
        .collect();
    simpson(&values, h)
}

/// Node indices and weights (in units of `h`) for the integral over
/// `[x_i, x_{i+1}]` of the cubic (quadratic for three nodes) through the
/// nearest neighbours.
pub(crate) fn interval_rule(i: usize, n: usize) -> ([usize; 4], [f64; 4]) {
    debug_assert!(n >= 3 && i + 1 < n);
    if n == 3 {
        return if i == 0 {
            ([0, 1, 2, 2], [5.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0, 0.0])
        } else {
            ([0, 1, 2, 2], [-1.0 / 12.0, 8.0 / 12.0, 5.0 / 12.0, 0.0])
        };
    }
    if i == 0 {
        ([0, 1, 2, 3], [9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0])
    } else if i + 2 == n {
        (
            [n - 4, n - 3, n - 2, n - 1],
            [1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 9.0 / 24.0],
        )
    } else {
        (
            [i - 1, i, i + 1, i + 2],
            [-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0],
        )
    }
}

/// Running integral `F[i] = ∫_{x_0}^{x_i} f`, fourth-order accurate.
pub fn cumulative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let (idx, w) = interval_rule(i, n);
        let local: f64 = idx.iter().zip(w.iter()).map(|(&j, &wj)| wj * values[j]).sum();
        out[i + 1] = out[i] + h * local;
    }
    out
}

/// Local Lagrange interpolation (cubic where possible) of uniformly spaced
/// samples covering `[0, span]`.
pub fn interpolate(values: &[f64], span: f64, x: f64) -> f64 {
    let n = values.len();
    let h = span / (n - 1) as f64;
    let t = (x / h).clamp(0.0, (n - 1) as f64);
    let i = (t.floor() as usize).min(n - 2);
    if n == 3 {
        return lagrange(&values[0..3], 0, t);
    }
    let start = i.saturating_sub(1).min(n - 4);
    lagrange(&values[start..start + 4], start, t)
}

fn lagrange(vals: &[f64], start: usize, t: f64) -> f64 {
    let k = vals.len();
    let mut acc = 0.0;
    for j in 0..k {
        let tj = (start + j) as f64;
        let mut basis = 1.0;
        for m in 0..k {
            if m != j {
                let tm = (start + m) as f64;
                basis *= (t - tm) / (tj - tm);
            }
        }
        acc += basis * vals[j];
    }
    acc
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let g = UniformGrid::odd(2.0, 11).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| x * x * x - 2.0 * x + 1.0).collect();
        assert!((simpson(&v, g.step()) - (4.0 - 4.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let g = UniformGrid::new(3.0, 40).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
        let c = cumulative(&v, g.step());
        for (i, x) in g.nodes().iter().enumerate() {
            assert!((c[i] - (1.0 - x.cos())).abs() < 1e-5, "i={i}: {}", c[i] - (1.0 - x.cos()));
        }
        let g3 = UniformGrid::new(1.0, 3).unwrap();
        let c3 = cumulative(&[0.0, 0.25, 1.0], g3.step());
        assert!((c3[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let vals: Vec<f64> = (0..9).map(|i| {
            let x = i as f64 * 0.25;
            x * x * x - x
        }).collect();
        for x in [0.0, 0.1, 0.77, 1.3, 1.99, 2.0] {
            assert!((interpolate(&vals, 2.0, x) - (x * x * x - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(UniformGrid::new(1.0, 2).is_err());
        assert!(UniformGrid::odd(1.0, 10).is_err());
        assert!(UniformGrid::new(0.0, 11).is_err());
        assert_eq!(UniformGrid::new(1.0, 5).unwrap().x(4), 1.0);
    }
}
