//! Brownian motions and bridges with constant diffusion coefficient, band-occupation local
//! times and conditional weighted local-time moments.

use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::output::real;
use crate::quadrature::adaptive_simpson;
use crate::rng::{derive_seed, replicate, RngStream};
use crate::simulator::Path;
use crate::stats;

const TAG_BRIDGE: u32 = 41;
const TAG_MOTION: u32 = 42;

/// Bridge from `start` at time 0 to `end` at time `horizon` with diffusion coefficient `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeSpec {
    pub start: f64,
    pub end: f64,
    pub horizon: f64,
    pub sigma: f64,
}

impl BridgeSpec {
    pub fn new(start: f64, end: f64, horizon: f64, sigma: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { start, end, horizon, sigma })
    }

    /// Mean and variance of the bridge at time `s`.
    pub fn marginal(&self, s: f64) -> (f64, f64) {
        let r = s / self.horizon;
        (self.start + r * (self.end - self.start), self.sigma * self.sigma * s * (self.horizon - s) / self.horizon)
    }
}

fn grid_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= horizon / 100.0 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!("dt = {dt} must be at most horizon/100 = {}", horizon / 100.0)));
    }
    Ok(((horizon / dt) * (1.0 - 1e-12)).ceil() as usize)
}

/// Brownian bridge `y + (t/D)(x - y) + sigma (W_t - (t/D) W_D)` on a uniform grid of step at
/// most `dt`; both endpoints are exact.
pub fn simulate_bridge(spec: &BridgeSpec, dt: f64, rng: &mut RngStream) -> Result<Path> {
    let steps = grid_steps(spec.horizon, dt)?;
    let h = spec.horizon / steps as f64;
    let sq = h.sqrt();
    let mut w = Vec::with_capacity(steps + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..steps {
        acc += sq * rng.normal();
        w.push(acc);
    }
    let w_end = acc;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let mut values: Vec<f64> = times
        .iter()
        .zip(&w)
        .map(|(&t, &wt)| {
            let r = t / spec.horizon;
            spec.start + r * (spec.end - spec.start) + spec.sigma * (wt - r * w_end)
        })
        .collect();
    values[0] = spec.start;
    values[steps] = spec.end;
    Ok(Path { times, values })
}

/// Brownian motion `start + sigma W` on `[0, horizon]`.
pub fn simulate_brownian(start: f64, sigma: f64, horizon: f64, dt: f64, rng: &mut RngStream) -> Result<Path> {
    let steps = grid_steps(horizon, dt)?;
    let h = horizon / steps as f64;
    let sq = sigma * h.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = start;
    values.push(x);
    for _ in 0..steps {
        x += sq * rng.normal();
        values.push(x);
    }
    Ok(Path { times: (0..=steps).map(|k| k as f64 * h).collect(), values })
}

fn check_band(path: &Path, band_eps: f64, sigma: f64) -> Result<()> {
    let dt = path.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let floor = 2.0 * sigma * dt.sqrt();
    if !(band_eps >= floor * (1.0 - 1e-9)) {
        return Err(Error::Precondition(format!("band_eps = {band_eps} is below 2 sigma sqrt(dt) = {floor}")));
    }
    Ok(())
}

#[inline]
fn inside(x: f64, level: f64, band_eps: f64) -> f64 {
    if (x - level).abs() <= band_eps {
        1.0
    } else {
        0.0
    }
}

/// `sigma^2 / (2 eps)` times the time spent in `[level - eps, level + eps]`, counted with the
/// trapezoid rule on the path grid.
pub fn local_time(path: &Path, level: f64, band_eps: f64, sigma: f64) -> Result<f64> {
    check_band(path, band_eps, sigma)?;
    let mut occupation = 0.0;
    for k in 0..path.len().saturating_sub(1) {
        let dt = path.times[k + 1] - path.times[k];
        occupation += 0.5 * (inside(path.values[k], level, band_eps) + inside(path.values[k + 1], level, band_eps)) * dt;
    }
    Ok(sigma * sigma * occupation / (2.0 * band_eps))
}

/// `sum_k dL_k / s_k^beta` with `s_k` the interval midpoint, floored at the first grid step,
/// over intervals whose midpoint is at least `cutoff`.
fn weighted_sums(path: &Path, level: f64, band_eps: f64, sigma: f64, betas: &[f64], cutoff: f64) -> Vec<f64> {
    let scale = sigma * sigma / (2.0 * band_eps);
    let mut out = vec![0.0; betas.len()];
    let first = path.times[1] - path.times[0];
    for k in 0..path.len() - 1 {
        let (t0, t1) = (path.times[k], path.times[k + 1]);
        let occ = 0.5 * (inside(path.values[k], level, band_eps) + inside(path.values[k + 1], level, band_eps));
        if occ == 0.0 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        if mid < cutoff {
            continue;
        }
        let s = mid.max(first);
        let dl = scale * occ * (t1 - t0);
        for (o, &b) in out.iter_mut().zip(betas) {
            *o += dl * s.powf(-b);
        }
    }
    out
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalTimeEstimate {
    pub value: f64,
    pub band_eps: f64,
    pub dt: f64,
    pub stderr: f64,
}

fn check_beta(spec: &BridgeSpec, level: f64, beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Precondition(format!("beta must be nonnegative, got {beta}")));
    }
    if beta == 0.5 {
        return Err(Error::Precondition("beta = 1/2 is excluded".into()));
    }
    if beta >= 0.5 && level == spec.start {
        return Err(Error::SingularConfiguration(format!("beta = {beta} needs level != start")));
    }
    Ok(())
}

/// Estimates `E_y[int_cutoff^D dL^z_s / s^beta | B_D = x]` for several `beta` on shared bridges.
#[allow(clippy::too_many_arguments)]
pub fn bridge_lt_weighted_moments(
    spec: &BridgeSpec,
    level: f64,
    betas: &[f64],
    cutoff: f64,
    replicates: usize,
    dt: f64,
    band_eps: f64,
    seed: u64,
) -> Result<Vec<LocalTimeEstimate>> {
    for &b in betas {
        if cutoff > 0.0 {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Precondition(format!("beta must be nonnegative, got {b}")));
            }
        } else {
            check_beta(spec, level, b)?;
        }
    }
    if replicates < 2 {
        return Err(Error::Precondition("need at least two replicates".into()));
    }
    let sums = replicate(replicates, seed, TAG_BRIDGE, |_, rng| {
        let path = simulate_bridge(spec, dt, rng)?;
        check_band(&path, band_eps, spec.sigma)?;
        Ok(weighted_sums(&path, level, band_eps, spec.sigma, betas, cutoff))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let step = spec.horizon / grid_steps(spec.horizon, dt)? as f64;
    Ok((0..betas.len())
        .map(|j| {
            let column: Vec<f64> = sums.iter().map(|s| s[j]).collect();
            LocalTimeEstimate { value: stats::mean(&column), band_eps, dt: step, stderr: stats::std_error(&column) }
        })
        .collect())
}

/// Estimates `E_y[int_0^D dL^z_s / s^beta | B_D = x]`.
pub fn bridge_lt_weighted_moment(
    spec: &BridgeSpec,
    level: f64,
    beta: f64,
    replicates: usize,
    dt: f64,
    band_eps: f64,
    seed: u64,
) -> Result<LocalTimeEstimate> {
    Ok(bridge_lt_weighted_moments(spec, level, &[beta], 0.0, replicates, dt, band_eps, seed)?[0])
}

/// Estimates `E_y[int_cutoff^D dL^z_s / s | B_D = x]`.
pub fn truncated_lt_moment(
    spec: &BridgeSpec,
    level: f64,
    cutoff: f64,
    replicates: usize,
    dt: f64,
    band_eps: f64,
    seed: u64,
) -> Result<LocalTimeEstimate> {
    if !(cutoff > 0.0 && cutoff < spec.horizon) {
        return Err(Error::Precondition(format!("cutoff must lie in (0, horizon), got {cutoff}")));
    }
    Ok(bridge_lt_weighted_moments(spec, level, &[1.0], cutoff, replicates, dt, band_eps, seed)?[0])
}

/// Mean band local time at `level` over Brownian motions from `start`.
#[allow(clippy::too_many_arguments)]
pub fn brownian_local_time(
    start: f64,
    sigma: f64,
    horizon: f64,
    level: f64,
    replicates: usize,
    dt: f64,
    band_eps: f64,
    seed: u64,
) -> Result<LocalTimeEstimate> {
    let values = replicate(replicates, seed, TAG_MOTION, |_, rng| {
        let path = simulate_brownian(start, sigma, horizon, dt, rng)?;
        local_time(&path, level, band_eps, sigma)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let step = horizon / grid_steps(horizon, dt)? as f64;
    Ok(LocalTimeEstimate { value: stats::mean(&values), band_eps, dt: step, stderr: stats::std_error(&values) })
}

/// Exact mean of the band local time of the bridge,
/// `(1/(2 eps)) int_{z-eps}^{z+eps} sigma^2 int_0^D p_s(y, u) p_{D-s}(u, x) / p_D(y, x) ds du`.
pub fn bridge_expected_band_local_time(spec: &BridgeSpec, level: f64, band_eps: f64) -> Result<f64> {
    let d = spec.horizon;
    let v = spec.sigma * spec.sigma;
    let gauss = |m: f64, var: f64| (-(m * m) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    let end_density = gauss(spec.end - spec.start, v * d);
    let at_level = |u: f64| -> Result<f64> {
        let f = |theta: f64| {
            let sn = theta.sin();
            let s = d * sn * sn;
            let r = d - s;
            let decay = |gap: f64, t: f64| if gap == 0.0 { 0.0 } else { -gap * gap / (2.0 * v * t) };
            (decay(u - spec.start, s) + decay(spec.end - u, r)).exp() / (PI * v)
        };
        Ok(v * adaptive_simpson(f, 0.0, PI / 2.0, 1e-12, 40)? / end_density)
    };
    if band_eps == 0.0 {
        return at_level(level);
    }
    let mut cuts = vec![level - band_eps, level + band_eps];
    cuts.extend([spec.start, spec.end].into_iter().filter(|c| (c - level).abs() < band_eps));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        integral += adaptive_simpson(|u| at_level(u).unwrap_or(f64::NAN), w[0], w[1], 1e-10, 30)?;
    }
    Ok(integral / (2.0 * band_eps))
}

/// `C_eta D^(1/2-beta) (1 + |(y-z)/sqrt D|^min(1-2beta, 0) exp(-(y-z)^2/(eta D)) exp(eta (x-y)^2/D))`.
pub fn bound_rhs(spec: &BridgeSpec, level: f64, beta: f64, eta: f64, c_eta: f64) -> f64 {
    let d = spec.horizon;
    let gap = (spec.start - level) / d.sqrt();
    let factor = gap.abs().powf((1.0 - 2.0 * beta).min(0.0))
        * (-(spec.start - level).powi(2) / (eta * d)).exp()
        * (eta * (spec.end - spec.start).powi(2) / d).exp();
    c_eta * d.powf(0.5 - beta) * (1.0 + factor)
}

/// One tested geometry of the bridge bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub beta: f64,
    pub y: f64,
    pub x: f64,
    pub z: f64,
    pub delta: f64,
    pub sigma: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// The right-hand side with `C_eta = 1`.
    pub bound_rhs: f64,
    pub ratio: f64,
}

impl BoundRow {
    pub fn new(spec: &BridgeSpec, level: f64, beta: f64, eta: f64, est: &LocalTimeEstimate) -> Self {
        let rhs = bound_rhs(spec, level, beta, eta, 1.0);
        Self {
            beta,
            y: spec.start,
            x: spec.end,
            z: level,
            delta: spec.horizon,
            sigma: spec.sigma,
            estimate: est.value,
            stderr: est.stderr,
            bound_rhs: rhs,
            ratio: est.value / rhs,
        }
    }
}

/// Twenty bridge geometries `(y, x, z, delta)` with `y != z`, spread over three horizons.
pub fn standard_geometries() -> Vec<(f64, f64, f64, f64)> {
    let mut out = vec![
        (0.25, 0.0, 0.0, 1.0),
        (0.5, 0.0, 0.0, 1.0),
        (1.0, 0.0, 0.0, 1.0),
        (2.0, 0.0, 0.0, 1.0),
        (0.5, 1.0, 0.0, 1.0),
        (0.5, -1.0, 0.0, 1.0),
        (-0.3, 0.8, 0.2, 1.0),
        (1.5, -0.5, 0.5, 1.0),
    ];
    for delta in [0.25, 0.0625] {
        let s: f64 = f64::sqrt(delta);
        for (y, x) in [(0.25, 0.0), (0.5, 0.0), (1.0, 0.0), (2.0, 0.0), (0.5, 1.0), (0.5, -1.0)] {
            out.push((s * y, s * x, 0.0, delta));
        }
    }
    out
}

/// Weighted moments over `geometries` for every `beta`, with `dt = delta/steps` and
/// `band_eps = band_factor * sigma * sqrt(dt)`.
#[allow(clippy::too_many_arguments)]
pub fn bound_sweep(
    geometries: &[(f64, f64, f64, f64)],
    betas: &[f64],
    sigma: f64,
    eta: f64,
    replicates: usize,
    steps: usize,
    band_factor: f64,
    seed: u64,
) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::with_capacity(geometries.len() * betas.len());
    for (g, &(y, x, z, delta)) in geometries.iter().enumerate() {
        let spec = BridgeSpec::new(y, x, delta, sigma)?;
        let dt = delta / steps as f64;
        let band = band_factor * sigma * dt.sqrt();
        let estimates =
            bridge_lt_weighted_moments(&spec, z, betas, 0.0, replicates, dt, band, derive_seed(seed, g as u64, TAG_BRIDGE))?;
        rows.extend(betas.iter().zip(&estimates).map(|(&b, e)| BoundRow::new(&spec, z, b, eta, e)));
    }
    Ok(rows)
}

/// Unweighted bridge local time at the start level over each horizon of `deltas`, for
/// `y = x = z = 0`, and the log-log slope against the horizon.
pub fn scaling_sweep(
    deltas: &[f64],
    sigma: f64,
    replicates: usize,
    steps: usize,
    band_factor: f64,
    seed: u64,
) -> Result<(Vec<(f64, LocalTimeEstimate)>, f64)> {
    let mut out = Vec::with_capacity(deltas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        let spec = BridgeSpec::new(0.0, 0.0, delta, sigma)?;
        let dt = delta / steps as f64;
        let est = bridge_lt_weighted_moment(
            &spec,
            0.0,
            0.0,
            replicates,
            dt,
            band_factor * sigma * dt.sqrt(),
            derive_seed(seed, i as u64, TAG_MOTION),
        )?;
        out.push((delta, est));
    }
    let x: Vec<f64> = out.iter().map(|(d, _)| d.ln()).collect();
    let y: Vec<f64> = out.iter().map(|(_, e)| e.value.ln()).collect();
    let slope = stats::ols(&x, &y).ok_or(Error::DegenerateFit)?.slope;
    Ok((out, slope))
}

pub fn write_scaling_csv<W: Write>(rows: &[(f64, LocalTimeEstimate)], out: &mut W) -> io::Result<()> {
    writeln!(out, "delta,estimate,stderr")?;
    for (d, e) in rows {
        writeln!(out, "{},{},{}", real(*d), real(e.value), real(e.stderr))?;
    }
    Ok(())
}

/// Smallest `C_eta` dominating every row.
pub fn fitted_constant(rows: &[BoundRow]) -> f64 {
    rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

pub fn write_bound_csv<W: Write>(rows: &[BoundRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "beta,y,x,z,delta,sigma,estimate,stderr,bound_rhs,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            real(r.beta),
            real(r.y),
            real(r.x),
            real(r.z),
            real(r.delta),
            real(r.sigma),
            real(r.estimate),
            real(r.stderr),
            real(r.bound_rhs),
            real(r.ratio)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_occupation_arithmetic() {
        let path = Path { times: (0..=10_000).map(|k| k as f64 / 10_000.0).collect(), values: vec![0.3; 10_001] };
        let l = local_time(&path, 0.3, 0.1, 1.0).unwrap();
        assert!((l - 5.0).abs() < 1e-12);
    }

    #[test]
    fn narrow_band_is_rejected() {
        let path = Path { times: vec![0.0, 0.01, 0.02], values: vec![0.0; 3] };
        assert!(matches!(local_time(&path, 0.0, 0.1, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn bridge_endpoints_are_exact() {
        let spec = BridgeSpec::new(0.3, -1.7, 2.0, 1.2).unwrap();
        let mut rng = RngStream::new(5);
        let p = simulate_bridge(&spec, 0.01, &mut rng).unwrap();
        assert_eq!(p.values[0], 0.3);
        assert_eq!(*p.values.last().unwrap(), -1.7);
        assert_eq!(p.len(), 201);
    }

    #[test]
    fn bridge_mean_local_time_at_origin() {
        let spec = BridgeSpec::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let v = bridge_expected_band_local_time(&spec, 0.0, 0.0).unwrap();
        assert!((v - (PI / 2.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rhs_plug_in() {
        let spec = BridgeSpec::new(0.0, 0.0, 0.49, 1.1).unwrap();
        assert!((bound_rhs(&spec, 0.0, 0.0, 0.25, 1.5) - 2.0 * 1.5 * 0.7).abs() < 1e-12);
        let spec = BridgeSpec::new(0.2, 0.9, 1.0, 1.1).unwrap();
        let expected = 1.0 + (0.25f64 * 0.49).exp();
        assert!((bound_rhs(&spec, 0.2, 0.25, 0.25, 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn singular_configurations() {
        let spec = BridgeSpec::new(0.0, 0.0, 1.0, 1.1).unwrap();
        assert!(matches!(
            bridge_lt_weighted_moment(&spec, 0.0, 1.0, 10, 0.01, 0.25, 1),
            Err(Error::SingularConfiguration(_))
        ));
        assert!(matches!(bridge_lt_weighted_moment(&spec, 0.3, 0.5, 10, 0.01, 0.25, 1), Err(Error::Precondition(_))));
    }
}
