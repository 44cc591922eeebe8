//! One-dimensional diffusion models `dX = b(X) dt + a(X) dB`, class validation and their
//! explicit stationary densities `pi(x) = c exp(2 int b/a^2) / a^2(x)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::profiles::{smooth_sign, smooth_sign_sup, BumpFunction};
use crate::quadrature::adaptive_simpson;
use crate::rng::RngStream;

/// Reference model families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelFamily {
    /// `b(x) = -theta x`, `a = sigma`.
    OrnsteinUhlenbeckLike,
    /// `b(x) = -eta sgn~((x - x*)/A)`, `a = 1`.
    SmoothSignDrift,
    /// Smooth-sign drift with `a(x) = 1 + amp psi((x - x*)/h)`, `amp = epsilon/M`.
    PerturbedDiffusion,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::OrnsteinUhlenbeckLike => "ou",
            ModelFamily::SmoothSignDrift => "smooth_sign",
            ModelFamily::PerturbedDiffusion => "perturbed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ou" => Some(ModelFamily::OrnsteinUhlenbeckLike),
            "smooth_sign" => Some(ModelFamily::SmoothSignDrift),
            "perturbed" => Some(ModelFamily::PerturbedDiffusion),
            _ => None,
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat numeric parameter record of a model family.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelParams(BTreeMap<String, f64>);

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.0.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    fn require(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::InvalidParams(format!("missing parameter `{key}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Drift coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Drift {
    Zero,
    Linear { theta: f64 },
    SmoothSign { eta: f64, scale: f64, center: f64 },
}

impl Drift {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Drift::Zero => 0.0,
            Drift::Linear { theta } => -theta * x,
            Drift::SmoothSign { eta, scale, center } => -eta * smooth_sign((x - center) / scale)[0],
        }
    }

    /// `[b, b', b'', b''']`.
    pub fn derivatives(&self, x: f64) -> [f64; 4] {
        match *self {
            Drift::Zero => [0.0; 4],
            Drift::Linear { theta } => [-theta * x, -theta, 0.0, 0.0],
            Drift::SmoothSign { eta, scale, center } => {
                let s = smooth_sign((x - center) / scale);
                [-eta * s[0], -eta * s[1] / scale, -eta * s[2] / scale.powi(2), -eta * s[3] / scale.powi(3)]
            }
        }
    }
}

/// Diffusion coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Diffusion {
    Constant(f64),
    /// `1 + amplitude * psi((x - center)/width)` with the standard bump `psi`.
    Bump { amplitude: f64, center: f64, width: f64 },
}

impl Diffusion {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Diffusion::Constant(s) => s,
            Diffusion::Bump { amplitude, center, width } => {
                let u = (x - center) / width;
                if u.abs() >= 1.0 {
                    1.0
                } else {
                    1.0 + amplitude * BumpFunction::shared().value(u)
                }
            }
        }
    }

    /// `[a, a', a'', a''']`.
    pub fn derivatives(&self, x: f64) -> [f64; 4] {
        match *self {
            Diffusion::Constant(s) => [s, 0.0, 0.0, 0.0],
            Diffusion::Bump { amplitude, center, width } => {
                let p = BumpFunction::shared().derivatives((x - center) / width);
                [
                    1.0 + amplitude * p[0],
                    amplitude * p[1] / width,
                    amplitude * p[2] / width.powi(2),
                    amplitude * p[3] / width.powi(3),
                ]
            }
        }
    }
}

/// Constants of the coefficient class: ellipticity, derivative bounds, mean reversion and the
/// Holder radius of the stationary density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassConstants {
    pub a_min: f64,
    /// Bounds on `|a|, |a'|, |a''|, |a'''|`.
    pub a_bounds: [f64; 4],
    /// Bounds on `|b(0)|, |b'|, |b''|, |b'''|`.
    pub b_bounds: [f64; 4],
    pub mean_revert_c: f64,
    pub mean_revert_rho: f64,
    pub holder_l: f64,
}

impl ClassConstants {
    fn check(&self) -> Result<()> {
        let all = [self.a_min, self.mean_revert_c, self.mean_revert_rho, self.holder_l]
            .into_iter()
            .chain(self.a_bounds)
            .chain(self.b_bounds);
        for v in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("class constant {v} is not strictly positive")));
            }
        }
        if self.a_min >= self.a_bounds[0] {
            return Err(Error::Validation("a_min must be below the bound on |a|".into()));
        }
        Ok(())
    }
}

/// Slack applied to declared bounds so that they hold strictly.
fn padded(v: f64) -> f64 {
    v * 1.001 + 1e-9
}

/// A drift/diffusion pair with its smoothness metadata and class constants.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionModel {
    family: ModelFamily,
    params: ModelParams,
    drift: Drift,
    diffusion: Diffusion,
    beta: f64,
    anchor: Option<f64>,
    constants: ClassConstants,
}

/// Builds a model of the given family from its flat parameters and validates it.
///
/// Parameters: `ou` takes `theta`, `sigma`; `smooth_sign` takes `eta`, `A`, `x_star`;
/// `perturbed` additionally takes `h`, `M` and `epsilon`. All take an optional `beta`.
pub fn make_reference_model(family: ModelFamily, params: &ModelParams) -> Result<DiffusionModel> {
    let model = match family {
        ModelFamily::OrnsteinUhlenbeckLike => {
            let theta = params.get_or("theta", 1.0);
            let sigma = params.get_or("sigma", 1.0);
            if !(theta > 0.0 && sigma > 0.0) {
                return Err(Error::InvalidParams("theta and sigma must be positive".into()));
            }
            let v = sigma * sigma / (2.0 * theta);
            DiffusionModel {
                family,
                params: params.clone(),
                drift: Drift::Linear { theta },
                diffusion: Diffusion::Constant(sigma),
                beta: params.get_or("beta", 2.0),
                anchor: None,
                constants: ClassConstants {
                    a_min: 0.5 * sigma,
                    a_bounds: [2.0 * sigma, 1.0, 1.0, 1.0],
                    b_bounds: [1.0, padded(theta), 1.0, 1.0],
                    mean_revert_c: 0.5 * theta,
                    mean_revert_rho: 1.0,
                    holder_l: 4.0 * (1.0 + 1.0 / (v * v)),
                },
            }
        }
        ModelFamily::SmoothSignDrift | ModelFamily::PerturbedDiffusion => {
            let eta = params.get_or("eta", 1.0);
            let x_star = params.get_or("x_star", 0.0);
            let scale = params.get_or("A", 2.0 + x_star.abs());
            if !(eta > 0.0) {
                return Err(Error::InvalidParams(format!("eta must be positive, got {eta}")));
            }
            if !(scale >= 1.0) {
                return Err(Error::InvalidParams(format!("A must be at least 1, got {scale}")));
            }
            let s = smooth_sign_sup();
            let drift = Drift::SmoothSign { eta, scale, center: x_star };
            let mut holder_l = 10.0 * (1.0 + eta).powi(3) * (1.0 + 1.0 / scale).powi(3);
            let (diffusion, a_min, a_bounds) = if family == ModelFamily::PerturbedDiffusion {
                let h = params.require("h")?;
                let m = params.require("M")?;
                let eps = params.get_or("epsilon", 1.0);
                if !(h > 0.0 && h <= scale) {
                    return Err(Error::InvalidParams(format!("bump width h = {h} must lie in (0, A]")));
                }
                let amp = eps / m;
                if !(amp.abs() < 1.0) {
                    return Err(Error::InvalidParams(format!("|epsilon/M| = {} must be below 1", amp.abs())));
                }
                let p = BumpFunction::shared().sup_norms();
                let al = |l: i32| padded(amp.abs() * p[l as usize] / h.powi(l));
                holder_l += 10.0 * (1..4).map(al).sum::<f64>();
                (
                    Diffusion::Bump { amplitude: amp, center: x_star, width: h },
                    0.5 * (1.0 - amp.abs()),
                    [padded(1.0 + amp.abs()), al(1), al(2), al(3)],
                )
            } else {
                (Diffusion::Constant(1.0), 0.5, [2.0, 1.0, 1.0, 1.0])
            };
            DiffusionModel {
                family,
                params: params.clone(),
                drift,
                diffusion,
                beta: params.get_or("beta", 3.0),
                anchor: Some(x_star),
                constants: ClassConstants {
                    a_min,
                    a_bounds,
                    b_bounds: [
                        padded(eta),
                        padded(eta * s[1] / scale),
                        padded(eta * s[2] / scale.powi(2)),
                        padded(eta * s[3] / scale.powi(3)),
                    ],
                    mean_revert_c: 0.5 * eta,
                    mean_revert_rho: (x_star.abs() + 2.0 * scale).max(4.0 * x_star.abs()),
                    holder_l,
                },
            }
        }
    };
    if !(model.beta > 0.0) {
        return Err(Error::InvalidParams("beta must be positive".into()));
    }
    model.validate()?;
    Ok(model)
}

impl DiffusionModel {
    /// Standard Brownian motion; not a member of the ergodic class and never validated.
    pub fn brownian() -> Self {
        DiffusionModel {
            family: ModelFamily::OrnsteinUhlenbeckLike,
            params: ModelParams::new().with("theta", 0.0).with("sigma", 1.0),
            drift: Drift::Zero,
            diffusion: Diffusion::Constant(1.0),
            beta: 2.0,
            anchor: None,
            constants: ClassConstants {
                a_min: 0.5,
                a_bounds: [2.0, 1.0, 1.0, 1.0],
                b_bounds: [1.0; 4],
                mean_revert_c: 1.0,
                mean_revert_rho: 1.0,
                holder_l: 1.0,
            },
        }
    }

    /// Ornstein-Uhlenbeck shortcut, `b(x) = -theta x`, `a = sigma`.
    pub fn ornstein_uhlenbeck(theta: f64, sigma: f64) -> Result<Self> {
        make_reference_model(
            ModelFamily::OrnsteinUhlenbeckLike,
            &ModelParams::new().with("theta", theta).with("sigma", sigma),
        )
    }

    /// Replaces the declared class constants (no validation).
    pub fn with_constants(mut self, constants: ClassConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn drift(&self) -> Drift {
        self.drift
    }

    pub fn diffusion(&self) -> Diffusion {
        self.diffusion
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn constants(&self) -> &ClassConstants {
        &self.constants
    }

    /// Lower limit of the drift integral in the density formula.
    pub fn anchor(&self) -> f64 {
        self.anchor.unwrap_or(0.0)
    }

    /// Short identifier used in CSV headers.
    pub fn tag(&self) -> String {
        let mut s = self.family.name().to_string();
        for (k, v) in self.params.iter() {
            s.push_str(&format!(";{k}={v}"));
        }
        s
    }

    #[inline]
    pub fn b(&self, x: f64) -> f64 {
        self.drift.value(x)
    }

    #[inline]
    pub fn a(&self, x: f64) -> f64 {
        self.diffusion.value(x)
    }

    #[inline]
    fn log_density_rate(&self, x: f64) -> f64 {
        let a = self.a(x);
        2.0 * self.b(x) / (a * a)
    }

    /// Checks ellipticity, derivative bounds and mean reversion on the default test grid.
    pub fn validate(&self) -> Result<()> {
        self.validate_on(&self.default_grid())
    }

    /// Checks the class conditions at every point of `grid`.
    pub fn validate_on(&self, grid: &[f64]) -> Result<()> {
        let c = &self.constants;
        c.check()?;
        let b0 = self.b(0.0).abs();
        if b0 > c.b_bounds[0] {
            return Err(Error::Validation(format!("|b(0)| = {b0} exceeds {}", c.b_bounds[0])));
        }
        for &x in grid {
            let a = self.diffusion.derivatives(x);
            let b = self.drift.derivatives(x);
            if a[0] * a[0] < c.a_min * c.a_min {
                return Err(Error::Validation(format!("a({x})^2 = {} below a_min^2", a[0] * a[0])));
            }
            if a[0].abs() > c.a_bounds[0] {
                return Err(Error::Validation(format!("|a({x})| = {} exceeds {}", a[0].abs(), c.a_bounds[0])));
            }
            for l in 1..4 {
                if a[l].abs() > c.a_bounds[l] {
                    return Err(Error::Validation(format!(
                        "|a^({l})({x})| = {} exceeds {}",
                        a[l].abs(),
                        c.a_bounds[l]
                    )));
                }
                if b[l].abs() > c.b_bounds[l] {
                    return Err(Error::Validation(format!(
                        "|b^({l})({x})| = {} exceeds {}",
                        b[l].abs(),
                        c.b_bounds[l]
                    )));
                }
            }
            if x.abs() >= c.mean_revert_rho && x * b[0] > -c.mean_revert_c * x.abs() {
                return Err(Error::Validation(format!("mean reversion fails at x = {x}")));
            }
        }
        Ok(())
    }

    /// Uniform grid over a window well beyond the mean-reversion radius, refined on the bump.
    pub fn default_grid(&self) -> Vec<f64> {
        let r = (4.0 * self.constants.mean_revert_rho).max(10.0) + self.anchor().abs();
        let mut grid: Vec<f64> = (0..=8000).map(|i| -r + 2.0 * r * i as f64 / 8000.0).collect();
        if let Diffusion::Bump { center, width, .. } = self.diffusion {
            grid.extend((0..=2000).map(|i| center - width + 2.0 * width * i as f64 / 2000.0));
            grid.sort_by(f64::total_cmp);
        }
        grid
    }
}

/// `exp(2 int_anchor^x b/a^2) / a(x)^2` computed by adaptive quadrature from the anchor.
pub fn unnormalized_stationary(model: &DiffusionModel, x: f64) -> Result<f64> {
    let phi = adaptive_simpson(|y| model.log_density_rate(y), model.anchor(), x, 1e-12, 40)?;
    let a = model.a(x);
    Ok(phi.exp() / (a * a))
}

const PANELS: usize = 4096;
const MAX_EXTENSIONS: usize = 10_000;
const INNER_TOL: f64 = 1e-13;

/// Normalized stationary density on a truncation window, with a CDF table for sampling.
#[derive(Clone, Debug)]
pub struct StationaryDensity {
    model: DiffusionModel,
    normalizer: f64,
    lo: f64,
    hi: f64,
    width: f64,
    nodes: Vec<f64>,
    log_potential: Vec<f64>,
    cdf: Vec<f64>,
    tangents: Vec<f64>,
}

/// Builds the stationary density of `model`; the window extends symmetrically around the anchor
/// in steps of the mean-reversion radius until the unnormalized density drops below
/// `tail_tol` times its peak.
pub fn build_stationary(model: &DiffusionModel, tail_tol: f64) -> Result<StationaryDensity> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::InvalidParams(format!("tail_tol must lie in (0, 1), got {tail_tol}")));
    }
    let anchor = model.anchor();
    let step = model.constants.mean_revert_rho;
    let rate = |y: f64| model.log_density_rate(y);
    let unnorm = |x: f64, phi: f64| {
        let a = model.a(x);
        phi.exp() / (a * a)
    };

    let mut peak = unnorm(anchor, 0.0);
    let (mut phi_r, mut phi_l) = (0.0, 0.0);
    let mut k = 0usize;
    loop {
        k += 1;
        if k > MAX_EXTENSIONS {
            return Err(Error::NonIntegrable(anchor + k as f64 * step));
        }
        let (r0, r1) = (anchor + (k - 1) as f64 * step, anchor + k as f64 * step);
        let (l0, l1) = (anchor - (k - 1) as f64 * step, anchor - k as f64 * step);
        phi_r += adaptive_simpson(rate, r0, r1, 1e-12, 40)?;
        phi_l += adaptive_simpson(rate, l0, l1, 1e-12, 40)?;
        let (ur, ul) = (unnorm(r1, phi_r), unnorm(l1, phi_l));
        if !(ur.is_finite() && ul.is_finite()) {
            return Err(Error::NonIntegrable(r1));
        }
        peak = peak.max(ur).max(ul);
        if ur < tail_tol * peak && ul < tail_tol * peak {
            break;
        }
    }

    let half = PANELS / 2;
    let (lo, hi) = (anchor - k as f64 * step, anchor + k as f64 * step);
    let width = (hi - lo) / PANELS as f64;
    let nodes: Vec<f64> = (0..=PANELS).map(|i| anchor + (i as f64 - half as f64) * width).collect();
    let mut log_potential = vec![0.0; PANELS + 1];
    for i in half + 1..=PANELS {
        log_potential[i] = log_potential[i - 1] + adaptive_simpson(rate, nodes[i - 1], nodes[i], INNER_TOL, 40)?;
    }
    for i in (0..half).rev() {
        log_potential[i] = log_potential[i + 1] + adaptive_simpson(rate, nodes[i + 1], nodes[i], INNER_TOL, 40)?;
    }
    let peak = (0..=PANELS).map(|i| unnorm(nodes[i], log_potential[i])).fold(0.0, f64::max);

    let mut density = StationaryDensity {
        model: model.clone(),
        normalizer: 1.0,
        lo,
        hi,
        width,
        nodes,
        log_potential,
        cdf: vec![0.0; PANELS + 1],
        tangents: vec![0.0; PANELS + 1],
    };
    let mut masses = Vec::with_capacity(PANELS);
    for i in 0..PANELS {
        let (a, b) = (density.nodes[i], density.nodes[i + 1]);
        let m = adaptive_simpson(|x| density.unnormalized_in_panel(i, x), a, b, 1e-14 * peak, 40)?;
        masses.push(m);
    }
    let mut acc = crate::stats::KahanSum::default();
    let mut cumulative = vec![0.0; PANELS + 1];
    for (i, m) in masses.iter().enumerate() {
        acc.add(*m);
        cumulative[i + 1] = acc.value();
    }
    let total = acc.value();
    density.normalizer = 1.0 / total;
    density.cdf = cumulative.iter().map(|c| c / total).collect();
    density.cdf[PANELS] = 1.0;
    density.tangents = fritsch_carlson(&density);
    Ok(density)
}

/// Monotone Hermite tangents `dx/du` of the inverse CDF at the table nodes.
fn fritsch_carlson(d: &StationaryDensity) -> Vec<f64> {
    let n = d.nodes.len();
    let secants: Vec<f64> = (0..n - 1)
        .map(|i| (d.nodes[i + 1] - d.nodes[i]) / (d.cdf[i + 1] - d.cdf[i]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        let (s0, s1) = (secants[i - 1], secants[i]);
        m[i] = if s0.is_finite() && s1.is_finite() { 2.0 * s0 * s1 / (s0 + s1) } else { s0.min(s1) };
    }
    for i in 0..n - 1 {
        let s = secants[i];
        if !s.is_finite() {
            continue;
        }
        let (a, b) = (m[i] / s, m[i + 1] / s);
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[i] = t * a * s;
            m[i + 1] = t * b * s;
        }
    }
    m
}

impl StationaryDensity {
    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    /// `c_pi`, the factor turning the unnormalized density into a probability density.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn truncation_domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Table nodes and CDF values.
    pub fn cdf_table(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.cdf)
    }

    fn panel(&self, x: f64) -> usize {
        (((x - self.lo) / self.width).floor() as isize).clamp(0, PANELS as isize - 1) as usize
    }

    fn log_potential_at(&self, i: usize, x: f64) -> f64 {
        let node = self.nodes[i];
        let rate = |y: f64| self.model.log_density_rate(y);
        self.log_potential[i] + adaptive_simpson(rate, node, x, INNER_TOL, 40).unwrap_or(f64::NAN)
    }

    fn unnormalized_in_panel(&self, i: usize, x: f64) -> f64 {
        let a = self.model.a(x);
        self.log_potential_at(i, x).exp() / (a * a)
    }

    /// Unnormalized density from the tabulated drift integral.
    pub fn unnormalized(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let i = self.panel(x);
        let i = if x - self.nodes[i] > 0.5 * self.width && i < PANELS { i + 1 } else { i };
        self.unnormalized_in_panel(i, x)
    }

    /// Normalized density; zero outside the truncation window.
    pub fn density(&self, x: f64) -> f64 {
        self.normalizer * self.unnormalized(x)
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let i = self.panel(x);
        let part = adaptive_simpson(|y| self.unnormalized_in_panel(i, y), self.nodes[i], x, 1e-15, 40).unwrap_or(0.0);
        (self.cdf[i] + self.normalizer * part).clamp(0.0, 1.0)
    }

    /// Inverse CDF by monotone cubic Hermite interpolation of the table.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => return self.nodes[i],
            Err(i) => i.clamp(1, PANELS) - 1,
        };
        let du = self.cdf[i + 1] - self.cdf[i];
        let t = (u - self.cdf[i]) / du;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let x = h00 * self.nodes[i] + h10 * du * self.tangents[i] + h01 * self.nodes[i + 1] + h11 * du * self.tangents[i + 1];
        x.clamp(self.nodes[i], self.nodes[i + 1])
    }

    /// Draws one value from the stationary law.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.quantile(rng.uniform())
    }

    /// Largest finite-difference derivative magnitude of orders `1..=k` over `points` grid points,
    /// where `k` is the largest integer strictly below `beta`.
    pub fn holder_radius(&self, beta: f64, points: usize) -> f64 {
        let k = (beta.ceil() as usize).saturating_sub(1).min(2);
        let step = 1e-4;
        let (lo, hi) = (self.lo + 2.0 * step, self.hi - 2.0 * step);
        let mut worst = (0..points).map(|j| self.density(lo + (hi - lo) * j as f64 / (points - 1) as f64)).fold(0.0, f64::max);
        for j in 0..points {
            let x = lo + (hi - lo) * j as f64 / (points - 1) as f64;
            let (p, c, m) = (self.density(x + step), self.density(x), self.density(x - step));
            if k >= 1 {
                worst = worst.max(((p - m) / (2.0 * step)).abs());
            }
            if k >= 2 {
                worst = worst.max(((p - 2.0 * c + m) / (step * step)).abs());
            }
        }
        worst
    }

    /// Checks the Holder certificate against the declared `holder_l`.
    pub fn check_holder_certificate(&self, points: usize) -> Result<f64> {
        let r = self.holder_radius(self.model.beta(), points);
        if r > self.model.constants.holder_l {
            return Err(Error::Validation(format!(
                "density derivatives reach {r}, above holder_l = {}",
                self.model.constants.holder_l
            )));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_density_matches_gaussian() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 1.0).unwrap();
        let d = build_stationary(&m, 1e-10).unwrap();
        let root_pi = std::f64::consts::PI.sqrt();
        assert!((d.density(0.0) - 1.0 / root_pi).abs() < 1e-10);
        for x in [-2.3, -0.7, 0.1, 1.9] {
            assert!((d.density(x) - (-x * x).exp() / root_pi).abs() < 1e-10, "x = {x}");
        }
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let m = DiffusionModel::ornstein_uhlenbeck(1.0, 1.0).unwrap();
        let d = build_stationary(&m, 1e-10).unwrap();
        for u in [1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = d.quantile(u);
            assert!((d.cdf(x) - u).abs() < 1e-8, "u = {u}");
        }
    }

    #[test]
    fn smooth_sign_flat_core() {
        let p = ModelParams::new().with("eta", 1.0).with("A", 2.0).with("x_star", 0.0);
        let m = make_reference_model(ModelFamily::SmoothSignDrift, &p).unwrap();
        let d = build_stationary(&m, 1e-10).unwrap();
        let c = d.normalizer();
        for x in [-2.0, -1.3, 0.0, 0.4, 1.99] {
            assert_eq!(d.density(x), c);
        }
        assert!(d.density(2.5) < c);
    }

    #[test]
    fn small_scale_is_rejected() {
        let p = ModelParams::new().with("eta", 1.0).with("A", 0.5);
        assert!(matches!(
            make_reference_model(ModelFamily::SmoothSignDrift, &p),
            Err(Error::InvalidParams(_))
        ));
    }
}
