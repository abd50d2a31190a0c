//! Green kernels of the hinged fourth-order operator `y'''' - M y''` and
//! their closed-form integrals.
//!
//! With `mu = sqrt(M)`:
//!
//! * `G0(t, s)`: Green function of `-y''` with `y(0) = y(L) = 0`,
//! * `GM(t, s)`: Green function of `-y'' + M y`, same boundary conditions,
//! * `G(x, s) = ∫ G0(x, t) GM(t, s) dt`: Green function of the fourth-order
//!   operator with Navier conditions.
//!
//! Every product of hyperbolic sines is evaluated in exponentially scaled
//! form so nothing overflows for `mu * L` up to ~700, and the small `mu * L`
//! regime switches to series forms that avoid the cancellation between the
//! polynomial and hyperbolic parts.

use crate::error::{MelanError, Result};

/// Stiffness ratio `M` and span `L`, plus the derived `mu = sqrt(M)` and
/// `mu * L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    m: f64,
    l: f64,
    mu: f64,
    mu_l: f64,
}

impl KernelParams {
    pub fn new(m: f64, l: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(MelanError::Domain(format!("M must be positive and finite, got {m}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(MelanError::Domain(format!("L must be positive and finite, got {l}")));
        }
        let mu = m.sqrt();
        Ok(Self { m, l, mu, mu_l: mu * l })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu_l(&self) -> f64 {
        self.mu_l
    }
}

fn check_position(name: &str, x: f64, l: f64) -> Result<f64> {
    let slack = 1e-12 * l;
    if !x.is_finite() || x < -slack || x > l + slack {
        return Err(MelanError::Domain(format!("{name} = {x} lies outside [0, {l}]")));
    }
    Ok(x.clamp(0.0, l))
}

/// `sinh(a) sinh(b) / sinh(c)` for `0 <= a, b` and `a + b <= c`.
pub fn sinh_ratio(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(MelanError::Domain(format!("sinh_ratio needs c > 0, got {c}")));
    }
    if a < 0.0 || b < 0.0 || a + b > c + 1e-12 * c.max(1.0) {
        return Err(MelanError::Domain(format!(
            "sinh_ratio needs 0 <= a, b and a + b <= c, got ({a}, {b}, {c})"
        )));
    }
    Ok(sinh_ratio_unchecked(a, b, c))
}

pub(crate) fn sinh_ratio_unchecked(a: f64, b: f64, c: f64) -> f64 {
    let num = (-(-2.0 * a).exp_m1()) * (-(-2.0 * b).exp_m1());
    (a + b - c).exp() * num / (2.0 * (-(-2.0 * c).exp_m1()))
}

/// `sinh(a) / sinh(c)` for `0 <= a <= c`, `c > 0`.
pub(crate) fn sinh_fraction(a: f64, c: f64) -> f64 {
    (a - c).exp() * (-2.0 * a).exp_m1() / (-2.0 * c).exp_m1()
}

/// `sinh(z)/z - 1`, accurate for small `z`.
pub(crate) fn sinhc_m1(z: f64) -> f64 {
    let z2 = z * z;
    if z.abs() < 1.0 {
        // z^2/3! + z^4/5! + ...
        let mut term = z2 / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= z2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += term;
        }
        sum
    } else {
        z.sinh() / z - 1.0
    }
}

/// `θ(s) / sinh(mu L)` in a closed product form with no cancellation:
/// `(1 - e^{-mu s}) (1 - e^{-mu (L - s)}) / (1 + e^{-mu L})`.
pub(crate) fn theta_over_sinh_scaled(u: f64, w: f64) -> f64 {
    (-(-u).exp_m1()) * (-(-(w - u)).exp_m1()) / (1.0 + (-w).exp())
}

/// Green function of `-y''` with Dirichlet ends.
pub fn green_g0(t: f64, s: f64, l: f64) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(MelanError::Domain(format!("L must be positive, got {l}")));
    }
    let t = check_position("t", t, l)?;
    let s = check_position("s", s, l)?;
    let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
    Ok(lo * (l - hi) / l)
}

/// Green function of `-y'' + M y` with Dirichlet ends.
pub fn green_gm(t: f64, s: f64, kp: &KernelParams) -> Result<f64> {
    let t = check_position("t", t, kp.l)?;
    let s = check_position("s", s, kp.l)?;
    Ok(green_gm_unchecked(t, s, kp))
}

pub(crate) fn green_gm_unchecked(t: f64, s: f64, kp: &KernelParams) -> f64 {
    let (lo, hi) = if t <= s { (t, s) } else { (s, t) };
    let mu = kp.mu;
    sinh_ratio_unchecked(mu * lo, mu * (kp.l - hi), kp.mu_l) / mu
}

/// Green function of `y'''' - M y''` with Navier ends.
pub fn green_g(x: f64, s: f64, kp: &KernelParams) -> Result<f64> {
    let x = check_position("x", x, kp.l)?;
    let s = check_position("s", s, kp.l)?;
    Ok(green_g_unchecked(x, s, kp))
}

pub(crate) fn green_g_unchecked(x: f64, s: f64, kp: &KernelParams) -> f64 {
    let (lo, hi) = if x <= s { (x, s) } else { (s, x) };
    let mu = kp.mu;
    let u = mu * lo;
    let v = mu * (kp.l - hi);
    let w = kp.mu_l;
    let d = if w < 1.0 {
        let (tu, tv, tw) = (sinhc_m1(u), sinhc_m1(v), sinhc_m1(w));
        (u * v / w) * (tw - tu - tv - tu * tv) / (1.0 + tw)
    } else {
        u * v / w - sinh_ratio_unchecked(u, v, w)
    };
    d.max(0.0) / (mu * mu * mu)
}

/// `θ(s) = sinh(mu L) - sinh(mu (L - s)) - sinh(mu s)`.
///
/// Evaluated as `4 sinh(mu s / 2) sinh(mu L / 2) sinh(mu (L - s) / 2)`,
/// which is exact and free of cancellation.
pub fn theta(s: f64, kp: &KernelParams) -> Result<f64> {
    let s = check_position("s", s, kp.l)?;
    let u = kp.mu * s;
    let w = kp.mu_l;
    Ok(4.0 * (0.5 * u).sinh() * (0.5 * w).sinh() * (0.5 * (w - u)).sinh())
}

/// `θ(s) / sinh(mu L)`, finite for any `mu L`.
pub fn theta_over_sinh(s: f64, kp: &KernelParams) -> Result<f64> {
    let s = check_position("s", s, kp.l)?;
    Ok(theta_over_sinh_scaled(kp.mu * s, kp.mu_l))
}

/// `∫_0^L GM(x, s) ds = θ(x) / (M sinh(mu L))`.
pub fn gm_row_integral(x: f64, kp: &KernelParams) -> Result<f64> {
    Ok(theta_over_sinh(x, kp)? / kp.m)
}

/// `Ψ(x) = ∫_0^L G(x, s) ds = (L x - x^2) / (2M) - θ(x) / (M^2 sinh(mu L))`.
pub fn psi(x: f64, kp: &KernelParams) -> Result<f64> {
    let x = check_position("x", x, kp.l)?;
    Ok(psi_unchecked(x, kp))
}

pub(crate) fn psi_unchecked(x: f64, kp: &KernelParams) -> f64 {
    let mu = kp.mu;
    let w = kp.mu_l;
    let u = mu * x;
    let r = (w - u).max(0.0);
    let bracket = if w < 2.0 {
        let (a, b) = (sinhc_m1(0.5 * u), sinhc_m1(0.5 * r));
        let c1 = 2.0 * (0.25 * w).sinh().powi(2);
        (0.5 * u * r) * (c1 - a - b - a * b) / (0.5 * w).cosh()
    } else {
        0.5 * u * r - theta_over_sinh_scaled(u, w)
    };
    bracket.max(0.0) / (kp.m * kp.m)
}

/// Odd Taylor coefficients of `tanh`, generated from `tanh' = 1 - tanh^2`.
fn tanh_series() -> &'static [f64] {
    use std::sync::OnceLock;
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(|| {
        const DEG: usize = 49;
        let mut a = vec![0.0_f64; DEG + 1];
        for k in 0..DEG {
            let conv: f64 = (0..=k).map(|i| a[i] * a[k - i]).sum();
            let rhs = if k == 0 { 1.0 } else { 0.0 };
            a[k + 1] = (rhs - conv) / (k + 1) as f64;
        }
        a
    })
}

/// `z - tanh(z)` for `z >= 0`, without cancellation near zero.
pub(crate) fn tanh_defect(z: f64) -> f64 {
    if z < 0.5 {
        let a = tanh_series();
        let mut sum = 0.0;
        let mut j = a.len() - 1;
        if j % 2 == 0 {
            j -= 1;
        }
        while j >= 3 {
            sum = sum * z * z - a[j];
            j -= 2;
        }
        sum * z * z * z
    } else {
        z - z.tanh()
    }
}

/// `ζ = ∫_0^L ∫_0^L G(x, s) ds dx`.
///
/// Closed form `(1/mu^5) [w^3/12 + 2 tanh(w/2) - w]` with `w = mu L`; the
/// bracket is summed from its Taylor series when `w < 1`.
pub fn zeta(kp: &KernelParams) -> f64 {
    let w = kp.mu_l;
    let f = if w < 1.0 {
        let a = tanh_series();
        let z = 0.5 * w;
        let mut sum = 0.0;
        // start at z^5; the z and z^3 terms cancel against w^3/12 - w
        let mut j = a.len() - 1;
        if j % 2 == 0 {
            j -= 1;
        }
        while j >= 5 {
            sum = sum * z * z + 2.0 * a[j];
            j -= 2;
        }
        sum * z.powi(5)
    } else {
        w * w * w / 12.0 + 2.0 * (0.5 * w).tanh() - w
    };
    let mu = kp.mu;
    f / (mu * mu * mu * mu * mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson_fn;

    fn kp(m: f64, l: f64) -> KernelParams {
        KernelParams::new(m, l).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn params_validate() {
        assert!(KernelParams::new(0.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, -1.0).is_err());
        assert!(KernelParams::new(f64::NAN, 1.0).is_err());
        let p = kp(4.0, 3.0);
        assert_eq!(p.mu(), 2.0);
        assert_eq!(p.mu_l(), 6.0);
    }

    #[test]
    fn sinh_ratio_examples() {
        assert_eq!(sinh_ratio(0.0, 0.7, 2.0).unwrap(), 0.0);
        // sinh(1)^2 / sinh(2), 50-digit reference
        assert!(rel(sinh_ratio(1.0, 1.0, 2.0).unwrap(), 0.380_797_077_977_882_44) < 1e-15);
        // sinh(300)^2/sinh(600) = (1 - e^-600)^2 / (2 (1 - e^-1200)) = 1/2 in f64
        let big = sinh_ratio(300.0, 300.0, 600.0).unwrap();
        assert!(big.is_finite() && rel(big, 0.5) < 1e-12);
        assert!(sinh_ratio(1.0, 1.0, 0.0).is_err());
        assert!(sinh_ratio(1.5, 1.0, 2.0).is_err());
    }

    #[test]
    fn g0_examples() {
        assert_eq!(green_g0(0.0, 0.4, 1.0).unwrap(), 0.0);
        assert!((green_g0(1.0, 1.0, 4.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(green_g0(2.0, 2.0, 4.0).unwrap(), 1.0);
        let a = green_g0(0.3, 0.7, 1.0).unwrap();
        assert!((a - 0.09).abs() < 1e-15);
        assert_eq!(a, green_g0(0.7, 0.3, 1.0).unwrap());
        assert!(green_g0(1.2, 0.3, 1.0).is_err());
    }

    #[test]
    fn gm_examples() {
        let p = kp(1.3, 2.5);
        assert_eq!(green_gm(0.0, 1.0, &p).unwrap(), 0.0);
        let mid = green_gm(1.25, 1.25, &p).unwrap();
        let expect = (p.mu_l() / 2.0).tanh() / (2.0 * p.mu());
        assert!(rel(mid, expect) < 1e-14);
        // small-M limit approaches G0
        let tiny = kp(1e-10, 1.0);
        for (t, s) in [(0.3, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let g0 = green_g0(t, s, 1.0).unwrap();
            assert!(rel(green_gm(t, s, &tiny).unwrap(), g0) < 1e-6);
        }
        assert!(green_gm(-0.1, 0.5, &p).is_err());
    }

    #[test]
    fn g_matches_extended_precision() {
        // references from a 50-digit evaluation of the closed form
        let cases = [
            (0.3, 0.7, 1e-10, 1.0, 0.012_299_999_999_866_76),
            (0.3, 0.7, 1e-4, 1.0, 0.012_299_866_761_372_141),
            (0.2, 0.5, 1.0, 2.0, 0.031_798_424_650_108_006),
            (1.3, 0.4, 100.0, 2.0, 0.001_399_938_315_848_937_4),
            (0.001, 0.999, 0.01, 1.0, 1.664_720_942_604_779_3e-7),
        ];
        for (x, s, m, l, expect) in cases {
            let got = green_g(x, s, &kp(m, l)).unwrap();
            assert!(rel(got, expect) < 1e-9, "G({x},{s};{m},{l}) = {got}, want {expect}");
        }
        assert_eq!(green_g(0.0, 0.5, &kp(1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn g_factorizes_through_g0_and_gm() {
        let p = kp(1.0, 2.0);
        for i in 0..17 {
            for j in 0..17 {
                let x = 2.0 * i as f64 / 16.0;
                let s = 2.0 * j as f64 / 16.0;
                let direct = green_g(x, s, &p).unwrap();
                // split at the kinks so Simpson keeps its order
                let f = |t: f64| green_g0(x, t, 2.0).unwrap() * green_gm(t, s, &p).unwrap();
                let (a, b) = if x <= s { (x, s) } else { (s, x) };
                let q = simpson_fn(0.0, a, 401, f) + simpson_fn(a, b, 401, f) + simpson_fn(b, 2.0, 401, f);
                assert!(
                    (direct - q).abs() <= 1e-8 * direct.abs().max(1e-3),
                    "({x},{s}) {direct} vs {q}"
                );
            }
        }
    }

    #[test]
    fn theta_examples() {
        let p = kp(0.2, 2.0);
        assert!(theta(0.0, &p).unwrap().abs() < 1e-16);
        assert!(theta(2.0, &p).unwrap().abs() < 1e-16);
        // 50-digit reference: sinh(2/sqrt 5) - 2 sinh(1/sqrt 5)
        assert!(rel(theta(1.0, &p).unwrap(), 0.094_005_310_786_166_207) < 1e-14);
        let naive = |s: f64| {
            let (mu, l) = (p.mu(), p.l());
            (mu * l).sinh() - (mu * (l - s)).sinh() - (mu * s).sinh()
        };
        for s in [0.1, 0.5, 1.7] {
            assert!(rel(theta(s, &p).unwrap(), naive(s)) < 1e-12);
        }
    }

    #[test]
    fn psi_and_row_integral_examples() {
        let p = kp(1.0, 2.0);
        assert_eq!(psi(0.0, &p).unwrap(), 0.0);
        assert!(psi(2.0, &p).unwrap().abs() < 1e-15);
        assert!(rel(psi(1.0, &p).unwrap(), 0.148_054_273_663_885_40) < 1e-13);
        assert!(rel(gm_row_integral(1.0, &p).unwrap(), 0.351_945_726_336_114_60) < 1e-14);
        assert_eq!(gm_row_integral(0.0, &p).unwrap(), 0.0);
        assert!(rel(psi(0.3, &kp(1e-6, 1.0)).unwrap(), 0.010_587_498_928_387_609) < 1e-10);
    }

    #[test]
    fn zeta_examples() {
        let cases = [
            (1.0, 2.0, 0.189_854_978_578_196_44),
            (0.2, 2.0, 0.246_697_745_330_296_98),
            (1e-6, 1.0, 0.008_333_332_490_079_450_5),
            (0.01, 0.5, 0.000_260_350_804_131_267_20),
            (100.0, 10.0, 0.832_353_333_333_333_33),
        ];
        for (m, l, expect) in cases {
            assert!(rel(zeta(&kp(m, l)), expect) < 1e-13, "zeta({m},{l})");
        }
        // both branches agree at the switch
        let lo = zeta(&kp((1.0 - 1e-12f64).powi(2), 1.0));
        let hi = zeta(&kp((1.0 + 1e-12f64).powi(2), 1.0));
        assert!(rel(lo, hi) < 1e-10);
    }

    #[test]
    fn tanh_defect_branches_meet() {
        for z in [0.1_f64, 0.4999999, 0.5, 2.0] {
            let direct = z - z.tanh();
            let got = tanh_defect(z);
            let tol = 1e-12;
            assert!(rel(got, direct) < tol, "z={z}: {got} vs {direct}");
        }
        assert!(rel(tanh_defect(1e-3), 1e-9 / 3.0 - 2e-15 / 15.0) < 1e-12);
    }

    #[test]
    fn no_overflow_at_large_mu_l() {
        let p = kp(700.0 * 700.0, 1.0);
        for x in [0.0, 0.001, 0.3, 0.5, 0.999, 1.0] {
            for s in [0.0, 0.2, 0.5, 1.0] {
                assert!(green_gm(x, s, &p).unwrap().is_finite());
                assert!(green_g(x, s, &p).unwrap().is_finite());
            }
            assert!(theta(x, &p).unwrap().is_finite());
            assert!(psi(x, &p).unwrap().is_finite());
            assert!(gm_row_integral(x, &p).unwrap().is_finite());
        }
        assert!(zeta(&p).is_finite() && zeta(&p) > 0.0);
    }
}
