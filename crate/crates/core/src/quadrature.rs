//! Adaptive Simpson quadrature and small fixed-grid rules.

use crate::error::{Error, Result};

/// Default absolute tolerance per panel.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default recursion depth limit.
pub const DEFAULT_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement and Richardson correction.
///
/// Fails with [`Error::QuadratureFailure`] if a sub-interval still misses its share of the
/// tolerance when the depth limit is reached.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Convenience wrapper with the default tolerance and depth.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson(f, a, b, DEFAULT_TOL, DEFAULT_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return Err(Error::QuadratureFailure { a, b });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = crate::stats::KahanSum::default();
    for i in 1..x.len() {
        acc.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
    }
    acc.value()
}

/// Composite Gauss-Legendre rule with `panels` equal panels and 8 nodes per panel.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let w = (b - a) / panels as f64;
    let mut acc = crate::stats::KahanSum::default();
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * w;
        let r = 0.5 * w;
        for (x, wt) in NODES.iter().zip(WEIGHTS.iter()) {
            acc.add(wt * r * (f(c - r * x) + f(c + r * x)));
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let a = integrate(f64::sin, 0.0, 1.0).unwrap();
        let b = integrate(f64::sin, 1.0, 0.0).unwrap();
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn depth_limit_reports_failure() {
        let r = adaptive_simpson(|x| (1.0 / x).sin(), 1e-6, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn gauss_legendre_matches_closed_form() {
        let v = gauss_legendre(f64::exp, 0.0, 1.0, 4);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
