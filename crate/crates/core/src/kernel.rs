//! Compactly supported high-order kernels and the kernel estimator of the invariant density.

use std::fmt;
use std::io::{self, Write};

use crate::diffusion::StationaryDensity;
use crate::error::{Error, Result};
use crate::output::real;
use crate::quadrature::adaptive_simpson;
use crate::simulator::SampleSet;
use crate::stats::KahanSum;

pub const MAX_ORDER: usize = 20;

/// Legendre-projection kernel of order `M`: `K = sum_{j even, j <= M} P_j(0) (2j+1)/2 P_j` on
/// `[-1, 1]`. It integrates to one and annihilates monomials of degree `1..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    order: usize,
    legendre: Vec<f64>,
    coefficients: Vec<f64>,
    sup_norm: f64,
}

fn legendre_at_zero(j: usize) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    let mut v = 1.0;
    for k in (2..=j).step_by(2) {
        v *= -((k - 1) as f64) / k as f64;
    }
    v
}

/// Monomial coefficients of `P_0, ..., P_deg`.
fn legendre_monomials(deg: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![1.0]];
    if deg >= 1 {
        p.push(vec![0.0, 1.0]);
    }
    for k in 1..deg {
        let mut next = vec![0.0; k + 2];
        for (i, c) in p[k].iter().enumerate() {
            next[i + 1] += (2 * k + 1) as f64 * c / (k + 1) as f64;
        }
        for (i, c) in p[k - 1].iter().enumerate() {
            next[i] -= k as f64 * c / (k + 1) as f64;
        }
        p.push(next);
    }
    p
}

/// Builds the order-`order` kernel.
pub fn build_kernel(order: usize) -> Result<Kernel> {
    if order == 0 {
        return Err(Error::InvalidParams("kernel order must be at least 1".into()));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge(order));
    }
    let deg = order - order % 2;
    let legendre: Vec<f64> = (0..=deg).map(|j| legendre_at_zero(j) * (2 * j + 1) as f64 / 2.0).collect();
    let basis = legendre_monomials(deg);
    let mut coefficients = vec![0.0; deg + 1];
    for (w, p) in legendre.iter().zip(&basis) {
        for (i, c) in p.iter().enumerate() {
            coefficients[i] += w * c;
        }
    }
    let mut kernel = Kernel { order, legendre, coefficients, sup_norm: 0.0 };
    kernel.sup_norm = (0..=20_000).map(|i| kernel.eval(-1.0 + i as f64 / 10_000.0).abs()).fold(0.0, f64::max);
    Ok(kernel)
}

impl Kernel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Monomial coefficients, lowest power first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `K(x)`, zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() > 1.0 {
            return 0.0;
        }
        let (mut p0, mut p1) = (1.0, x);
        let mut acc = self.legendre[0];
        for j in 1..self.legendre.len() {
            if j > 1 {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            acc += self.legendre[j] * p1;
        }
        acc
    }

    /// `int K(x) x^l dx` by adaptive quadrature.
    pub fn moment(&self, l: u32) -> f64 {
        adaptive_simpson(|x| self.eval(x) * x.powi(l as i32), -1.0, 1.0, 1e-14, 50).unwrap_or(f64::NAN)
    }

    /// Largest deviation of the moments `0..=order` from `(1, 0, ..., 0)`.
    pub fn moment_defect(&self) -> f64 {
        (0..=self.order as u32)
            .map(|l| (self.moment(l) - if l == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `power,coefficient` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "power,coefficient")?;
        for (i, c) in self.coefficients.iter().enumerate() {
            writeln!(out, "{i},{}", real(*c))?;
        }
        Ok(())
    }
}

/// Evaluation point, bandwidth and kernel of the estimator.
#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub eval_point: f64,
    pub bandwidth: f64,
    pub kernel: Kernel,
}

impl EstimatorConfig {
    pub fn new(eval_point: f64, bandwidth: f64, kernel: Kernel) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::InvalidParams(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { eval_point, bandwidth, kernel })
    }
}

/// `(1/n) sum_{i<n} K((x* - X_{t_i})/h)/h`; the last observation is not used.
pub fn estimate_density(samples: &SampleSet, config: &EstimatorConfig) -> f64 {
    estimate_from_values(&samples.observations()[..samples.n()], config)
}

/// Kernel average over `values`.
pub fn estimate_from_values(values: &[f64], config: &EstimatorConfig) -> f64 {
    let h = config.bandwidth;
    let mut acc = KahanSum::default();
    for &x in values {
        acc.add(config.kernel.eval((config.eval_point - x) / h));
    }
    acc.value() / (values.len() as f64 * h)
}

/// Sampling regime of the observation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    ContinuousLike,
    Intermediate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ContinuousLike => "continuous_like",
            Regime::Intermediate => "intermediate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeLabel {
    pub label: Regime,
    /// `(1/T)^(1/(2 beta))`.
    pub threshold: f64,
}

/// `Intermediate` iff `delta > (1/(n delta))^(1/(2 beta))`; equality counts as continuous-like.
pub fn classify_regime(n: usize, delta: f64, beta: f64) -> RegimeLabel {
    let threshold = (1.0 / (n as f64 * delta)).powf(1.0 / (2.0 * beta));
    let label = if delta > threshold { Regime::Intermediate } else { Regime::ContinuousLike };
    RegimeLabel { label, threshold }
}

/// `(1/T)^(1/(2 beta))` when continuous-like, `(1/n)^(1/(2 beta + 1))` when intermediate.
pub fn bandwidth_rule(n: usize, delta: f64, beta: f64) -> f64 {
    match classify_regime(n, delta, beta).label {
        Regime::ContinuousLike => (1.0 / (n as f64 * delta)).powf(1.0 / (2.0 * beta)),
        Regime::Intermediate => (1.0 / n as f64).powf(1.0 / (2.0 * beta + 1.0)),
    }
}

/// Deterministic smoothing bias `int K_h(x* - y) pi(y) dy - pi(x*)`.
pub fn smoothing_bias(density: &StationaryDensity, kernel: &Kernel, x_star: f64, h: f64) -> Result<f64> {
    let f = |u: f64| kernel.eval(u) * density.density(x_star - h * u);
    let smoothed = adaptive_simpson(f, -1.0, 0.0, 1e-15, 50)? + adaptive_simpson(f, 0.0, 1.0, 1e-15, 50)?;
    Ok(smoothed - density.density(x_star))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_and_order_three() {
        let k1 = build_kernel(1).unwrap();
        assert_eq!(k1.eval(0.3), 0.5);
        assert_eq!(k1.eval(1.2), 0.0);
        let k3 = build_kernel(3).unwrap();
        assert!((k3.coefficients()[0] - 9.0 / 8.0).abs() < 1e-15);
        assert!((k3.coefficients()[2] + 15.0 / 8.0).abs() < 1e-15);
        assert_eq!(k3.coefficients().len(), 3);
    }

    #[test]
    fn recurrence_matches_monomials() {
        let k = build_kernel(8).unwrap();
        for x in [-0.9, -0.2, 0.0, 0.45, 1.0] {
            let horner = k.coefficients().iter().rev().fold(0.0, |acc, c| acc * x + c);
            assert!((horner - k.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn order_limits() {
        assert!(matches!(build_kernel(21), Err(Error::OrderTooLarge(21))));
        assert!(build_kernel(0).is_err());
        assert!(build_kernel(20).is_ok());
    }

    #[test]
    fn regime_examples() {
        let r = classify_regime(10_000, 1.0, 2.0);
        assert_eq!(r.label, Regime::Intermediate);
        assert!((r.threshold - 0.1).abs() < 1e-15);
        assert_eq!(classify_regime(1_000_000, 1e-3, 2.0).label, Regime::ContinuousLike);
        assert!((bandwidth_rule(10_000, 1e-3, 2.0) - 10f64.powf(-0.25)).abs() < 1e-12);
        assert!((bandwidth_rule(10_000, 1.0, 2.0) - 10f64.powf(-0.8)).abs() < 1e-12);
    }
}
