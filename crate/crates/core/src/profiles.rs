//! Smooth profile functions shared by the drift and diffusion coefficients: the smoothed sign
//! function and the zero-mean bump.

use std::sync::OnceLock;

use crate::quadrature::adaptive_simpson;

/// Smoothstep of degree seven: `s(0)=0`, `s(1)=1`, first three derivatives vanish at both ends.
#[inline]
fn step(t: f64) -> [f64; 4] {
    let u = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    let s = t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t3);
    let s1 = 140.0 * t3 * u * u * u;
    let s2 = 420.0 * t2 * u * u * (1.0 - 2.0 * t);
    let s3 = 840.0 * t * u * ((1.0 - 2.0 * t) * (1.0 - 2.0 * t) - t * u);
    [s, s1, s2, s3]
}

/// Smoothed sign: `0` on `[-1, 1]`, `sign(x)` for `|x| > 2`, a monotone `C^3` bridge between.
///
/// Returns the value and the first three derivatives.
#[inline]
pub fn smooth_sign(x: f64) -> [f64; 4] {
    let ax = x.abs();
    if ax <= 1.0 {
        return [0.0; 4];
    }
    let sg = x.signum();
    if ax > 2.0 {
        return [sg, 0.0, 0.0, 0.0];
    }
    let [s, s1, s2, s3] = step(ax - 1.0);
    [sg * s, s1, sg * s2, s3]
}

/// Suprema of `|smooth_sign^(l)|` for `l = 0..=3`, measured on a dense grid.
pub fn smooth_sign_sup() -> [f64; 4] {
    let mut sup = [0.0f64; 4];
    for i in 0..=20_000 {
        let d = smooth_sign(1.0 + i as f64 / 20_000.0);
        for l in 0..4 {
            sup[l] = sup[l].max(d[l].abs());
        }
    }
    sup
}

/// Zero-mean mollifier `psi(x) = e(x) (1 - c2 x^2)` with `e(x) = exp(1 - 1/(1 - x^2))` on `(-1, 1)`.
///
/// `psi(0) = 1`, `psi` vanishes outside `(-1, 1)` and `c2` is chosen so that `psi` integrates to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpFunction {
    c2: f64,
    sup: [f64; 4],
    l2_sq: f64,
    d1_l1: f64,
}

/// Below this value of `1 - x^2` the mollifier and its derivatives are smaller than `1e-70`.
const EDGE: f64 = 5e-3;

fn mollifier(x: f64) -> [f64; 4] {
    let q = 1.0 - x * x;
    if q <= EDGE {
        return [0.0; 4];
    }
    let iq = 1.0 / q;
    let e = (1.0 - iq).exp();
    let g1 = -2.0 * x * iq * iq;
    let g2 = -2.0 * iq * iq - 8.0 * x * x * iq * iq * iq;
    let g3 = -24.0 * x * iq * iq * iq - 48.0 * x * x * x * iq * iq * iq * iq;
    [e, e * g1, e * (g2 + g1 * g1), e * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1)]
}

static STANDARD: OnceLock<BumpFunction> = OnceLock::new();

impl BumpFunction {
    /// Process-wide instance of [`BumpFunction::standard`].
    pub fn shared() -> &'static BumpFunction {
        STANDARD.get_or_init(BumpFunction::standard)
    }

    pub fn standard() -> Self {
        let tol = 1e-15;
        let i0 = adaptive_simpson(|x| mollifier(x)[0], -1.0, 1.0, tol, 50).expect("smooth integrand");
        let i2 = adaptive_simpson(|x| x * x * mollifier(x)[0], -1.0, 1.0, tol, 50).expect("smooth integrand");
        let mut bump = Self { c2: i0 / i2, sup: [0.0; 4], l2_sq: 0.0, d1_l1: 0.0 };
        let mut sup = [0.0f64; 4];
        for i in 0..=40_000 {
            let d = bump.derivatives(-1.0 + i as f64 / 20_000.0);
            for l in 0..4 {
                sup[l] = sup[l].max(d[l].abs());
            }
        }
        bump.sup = sup;
        bump.l2_sq = adaptive_simpson(|x| bump.value(x).powi(2), -1.0, 1.0, tol, 50).expect("smooth integrand");
        bump.d1_l1 = adaptive_simpson(|x| bump.d1(x).abs(), -1.0, 0.0, tol, 50).expect("smooth integrand")
            + adaptive_simpson(|x| bump.d1(x).abs(), 0.0, 1.0, tol, 50).expect("smooth integrand");
        bump
    }

    /// The quadratic correction coefficient.
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// `[psi, psi', psi'', psi''']` at `x`.
    #[inline]
    pub fn derivatives(&self, x: f64) -> [f64; 4] {
        let [e, e1, e2, e3] = mollifier(x);
        if e == 0.0 {
            return [0.0; 4];
        }
        let q = 1.0 - self.c2 * x * x;
        let q1 = -2.0 * self.c2 * x;
        let q2 = -2.0 * self.c2;
        [e * q, e1 * q + e * q1, e2 * q + 2.0 * e1 * q1 + e * q2, e3 * q + 3.0 * e2 * q1 + 3.0 * e1 * q2]
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let [e, ..] = mollifier(x);
        if e == 0.0 {
            0.0
        } else {
            e * (1.0 - self.c2 * x * x)
        }
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        self.derivatives(x)[1]
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        self.derivatives(x)[2]
    }

    /// `sup |psi^(l)|` for `l = 0..=3`.
    pub fn sup_norms(&self) -> [f64; 4] {
        self.sup
    }

    /// `int psi^2`.
    pub fn l2_squared(&self) -> f64 {
        self.l2_sq
    }

    /// `int |psi'|`, the total variation of `psi`.
    pub fn total_variation(&self) -> f64 {
        self.d1_l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn(f64) -> [f64; 4], points: &[f64]) {
        let h = 1e-5;
        for &x in points {
            let d = f(x);
            let (p, m) = (f(x + h), f(x - h));
            for l in 0..3 {
                let fd = (p[l] - m[l]) / (2.0 * h);
                assert!((fd - d[l + 1]).abs() < 1e-5 * (1.0 + d[l + 1].abs()), "x={x} order {}", l + 1);
            }
        }
    }

    #[test]
    fn smooth_sign_shape() {
        assert_eq!(smooth_sign(0.5)[0], 0.0);
        assert_eq!(smooth_sign(-1.0)[0], 0.0);
        assert_eq!(smooth_sign(2.5)[0], 1.0);
        assert_eq!(smooth_sign(-3.0)[0], -1.0);
        assert!((smooth_sign(1.5)[0] - 0.5).abs() < 1e-15);
        assert!((smooth_sign(2.0)[0] - 1.0).abs() < 1e-15);
        for k in 0..100 {
            let x = 1.0 + k as f64 / 100.0;
            assert!(smooth_sign(x + 0.01)[0] >= smooth_sign(x)[0]);
        }
    }

    #[test]
    fn smooth_sign_derivatives_match_finite_differences() {
        fd_check(smooth_sign, &[-1.9, -1.3, 1.1, 1.25, 1.5, 1.77, 1.95]);
    }

    #[test]
    fn smooth_sign_is_c3_at_the_joins() {
        for x in [1.0, 2.0, -1.0, -2.0] {
            let a = smooth_sign(x - 1e-9);
            let b = smooth_sign(x + 1e-9);
            for l in 0..4 {
                assert!((a[l] - b[l]).abs() < 1e-6, "x={x} l={l}");
            }
        }
    }

    #[test]
    fn bump_constraints() {
        let b = BumpFunction::standard();
        assert_eq!(b.value(0.0), 1.0);
        assert_eq!(b.value(1.5), 0.0);
        assert_eq!(b.value(-1.5), 0.0);
        let integral = adaptive_simpson(|x| b.value(x), -1.0, 1.0, 1e-14, 50).unwrap();
        assert!(integral.abs() < 1e-10);
        assert!(b.sup_norms()[0] <= 1.0);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = BumpFunction::standard();
        fd_check(|x| b.derivatives(x), &[-0.9, -0.6, -0.2, 0.0, 0.3, 0.55, 0.8, 0.95]);
    }
}
