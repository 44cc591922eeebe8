//! The two-hypotheses construction: a smooth-sign drift model with unit diffusion against the
//! same drift with diffusion `1 + psi_h/M` bumped around `x*`.

use std::io::{self, Write};

use crate::diffusion::{build_stationary, make_reference_model, ClassConstants, DiffusionModel, ModelFamily, ModelParams, StationaryDensity};
use crate::error::{Error, Result};
use crate::output::real;
use crate::profiles::BumpFunction;
use crate::quadrature::trapezoid;

const TAIL_TOL: f64 = 1e-12;

/// The standard zero-mean bump profile.
pub fn standard_bump() -> BumpFunction {
    BumpFunction::shared().clone()
}

/// `h_n = n^(-1/(1+2 beta))` and `M_n = n^(beta/(1+2 beta))/alpha0`.
pub fn calibrate(n: u64, beta: f64, alpha0: f64) -> (f64, f64) {
    let n = n as f64;
    let h = n.powf(-1.0 / (1.0 + 2.0 * beta));
    let m = n.powf(beta / (1.0 + 2.0 * beta)) / alpha0;
    (h, m)
}

/// `n h_n / M_n^2`, which equals `alpha0^2` under the calibration.
pub fn calibration_identity(n: u64, beta: f64, alpha0: f64) -> f64 {
    let (h, m) = calibrate(n, beta, alpha0);
    n as f64 * h / (m * m)
}

/// The base and perturbed models with their calibration.
#[derive(Clone, Debug)]
pub struct HypothesisPair {
    pub base_model: DiffusionModel,
    pub perturbed_model: DiffusionModel,
    pub eval_point: f64,
    pub n: u64,
    pub beta: f64,
    pub alpha0: f64,
    pub h_n: f64,
    pub m_n: f64,
    pub eta: f64,
    pub a_scale: f64,
}

/// Builds the calibrated pair for sample size `n`.
pub fn build_hypothesis_pair(n: u64, beta: f64, alpha0: f64, eta: f64, a_scale: f64, x_star: f64) -> Result<HypothesisPair> {
    if !(beta >= 3.0) {
        return Err(Error::InvalidParams(format!("beta must be at least 3, got {beta}")));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha0 must lie in (0, 1], got {alpha0}")));
    }
    if !(a_scale >= 1.0f64.max(x_star.abs())) {
        return Err(Error::InvalidParams(format!("A = {a_scale} must be at least max(1, |x*|)")));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParams(format!("eta must be positive, got {eta}")));
    }
    let (h, m) = calibrate(n, beta, alpha0);
    if !(m > 2.0) {
        return Err(Error::CalibrationViolation(format!("M_n = {m} must exceed 2")));
    }
    if !(h < 1.0) {
        return Err(Error::CalibrationViolation(format!("h_n = {h} must be below 1")));
    }
    let floor = (1.0 / alpha0) * (1.0 - 1e-12);
    if m * h.powi(3) < floor {
        return Err(Error::CalibrationViolation(format!("M_n h_n^3 = {} is below 1/alpha0 = {}", m * h.powi(3), 1.0 / alpha0)));
    }
    let params = ModelParams::new().with("eta", eta).with("A", a_scale).with("x_star", x_star).with("beta", beta);
    let base_model = make_reference_model(ModelFamily::SmoothSignDrift, &params)?;
    let mut pair = HypothesisPair {
        perturbed_model: base_model.clone(),
        base_model,
        eval_point: x_star,
        n,
        beta,
        alpha0,
        h_n: h,
        m_n: m,
        eta,
        a_scale,
    };
    pair.perturbed_model = pair.model_at(1.0)?;
    Ok(pair)
}

impl HypothesisPair {
    /// Class constants shared by every member of the family, uniform in `n`.
    fn uniform_constants(&self) -> ClassConstants {
        let p = BumpFunction::shared().sup_norms();
        let mut c = *self.base_model.constants();
        c.a_min = 0.5;
        c.a_bounds = [1.5, 0.0, 0.0, 0.0];
        for (bound, sup) in c.a_bounds.iter_mut().zip(p).skip(1) {
            *bound = self.alpha0 * sup * 1.001 + 1e-12;
        }
        c.holder_l += 10.0 * c.a_bounds[1..].iter().sum::<f64>();
        c
    }

    /// The interpolating model with diffusion `1 + epsilon psi_h/M`, `epsilon` in `[0, 1]`.
    pub fn model_at(&self, epsilon: f64) -> Result<DiffusionModel> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParams(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        let params = self
            .base_model
            .params()
            .clone()
            .with("h", self.h_n)
            .with("M", self.m_n)
            .with("epsilon", epsilon);
        let model = make_reference_model(ModelFamily::PerturbedDiffusion, &params)?.with_constants(self.uniform_constants());
        model.validate()?;
        Ok(model)
    }

    /// Stationary density of the `epsilon` model; `epsilon = 0` is the base model.
    pub fn stationary(&self, epsilon: f64) -> Result<StationaryDensity> {
        if epsilon == 0.0 {
            build_stationary(&self.base_model, TAIL_TOL)
        } else {
            build_stationary(&self.model_at(epsilon)?, TAIL_TOL)
        }
    }

    /// `tilde c_pi - c_pi`.
    pub fn normalizer_gap(&self) -> Result<f64> {
        Ok(self.stationary(1.0)?.normalizer() - self.stationary(0.0)?.normalizer())
    }
}

/// Normalized stationary density of the `epsilon` model at `x`.
pub fn perturbed_stationary(pair: &HypothesisPair, epsilon: f64, x: f64) -> Result<f64> {
    Ok(pair.stationary(epsilon)?.density(x))
}

/// `|tilde pi(x*) - pi(x*)|` and `M_n` times it.
pub fn separation(pair: &HypothesisPair) -> Result<(f64, f64)> {
    let p = pair.stationary(0.0)?.density(pair.eval_point);
    let q = pair.stationary(1.0)?.density(pair.eval_point);
    let raw = (q - p).abs();
    Ok((raw, pair.m_n * raw))
}

/// A density tabulated on an increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl DensityGrid {
    pub fn tabulate(density: &StationaryDensity, x: Vec<f64>) -> Self {
        let p = x.iter().map(|&v| density.density(v)).collect();
        Self { x, p }
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.x, &self.p)
    }
}

/// Squared Hellinger distance `int (sqrt p - sqrt q)^2` by the trapezoid rule.
pub fn hellinger_sq(p: &DensityGrid, q: &DensityGrid) -> Result<f64> {
    if p.x != q.x || p.x.len() != p.p.len() || q.x.len() != q.p.len() {
        return Err(Error::GridMismatch);
    }
    for g in [p, q] {
        let m = g.mass();
        if (m - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(m));
        }
    }
    let d: Vec<f64> = p.p.iter().zip(&q.p).map(|(a, b)| (a.max(0.0).sqrt() - b.max(0.0).sqrt()).powi(2)).collect();
    Ok(trapezoid(&p.x, &d).clamp(0.0, 2.0))
}

/// Uniform grid of `2^15` points over the base truncation window, refined on the bump support
/// when fewer than 64 points fall inside it.
pub fn hellinger_grid(pair: &HypothesisPair, base: &StationaryDensity) -> Vec<f64> {
    let (lo, hi) = base.truncation_domain();
    let n = 1usize << 15;
    let mut x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let (c, h) = (pair.eval_point, pair.h_n);
    let inside = x.iter().filter(|v| (*v - c).abs() <= h).count();
    if inside < 64 {
        x.retain(|v| (v - c).abs() > h);
        x.extend((0..=256).map(|i| c - h + 2.0 * h * i as f64 / 256.0));
        x.sort_by(f64::total_cmp);
        x.dedup();
    }
    x
}

/// Per-step ingredients of the two-hypotheses bound for one calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HellingerReport {
    pub n: u64,
    pub beta: f64,
    pub alpha0: f64,
    pub h_n: f64,
    pub m_n: f64,
    pub h2_initial: f64,
    pub budget: f64,
    pub separation: f64,
    pub scaled_separation: f64,
}

/// Separation and initial-law Hellinger distance of the pair.
pub fn hellinger_report(pair: &HypothesisPair) -> Result<HellingerReport> {
    let base = pair.stationary(0.0)?;
    let alt = pair.stationary(1.0)?;
    let grid = hellinger_grid(pair, &base);
    let h2 = hellinger_sq(&DensityGrid::tabulate(&base, grid.clone()), &DensityGrid::tabulate(&alt, grid))?;
    let raw = (alt.density(pair.eval_point) - base.density(pair.eval_point)).abs();
    Ok(HellingerReport {
        n: pair.n,
        beta: pair.beta,
        alpha0: pair.alpha0,
        h_n: pair.h_n,
        m_n: pair.m_n,
        h2_initial: h2,
        budget: pair.alpha0 * pair.alpha0,
        separation: raw,
        scaled_separation: pair.m_n * raw,
    })
}

/// Writes reports as CSV.
pub fn write_hellinger_csv<W: Write>(reports: &[HellingerReport], out: &mut W) -> io::Result<()> {
    writeln!(out, "n,beta,alpha0,h_n,M_n,separation,scaled_separation,h2,budget")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            real(r.beta),
            real(r.alpha0),
            real(r.h_n),
            real(r.m_n),
            real(r.separation),
            real(r.scaled_separation),
            real(r.h2_initial),
            real(r.budget)
        )?;
    }
    Ok(())
}
