//! Pathwise Malliavin quantities of the drift-free perturbed model
//! `X_t = x0 + int (1 + (epsilon/M) psi_h(X)) dB`, its first variation `Y`, its derivative in
//! `epsilon` and the leading-order score weight.

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lower_bound::HypothesisPair;
use crate::output::real;
use crate::profiles::BumpFunction;
use crate::rng::{derive_seed, replicate, RngStream};
use crate::simulator::{InitialState, BLOWUP};
use crate::stats;

const TAG_PATHS: u32 = 31;
const TAG_BOOTSTRAP: u32 = 32;
const TAG_PLUS: u32 = 33;
const TAG_MINUS: u32 = 34;

/// Fine steps per unit of `delta` used by the batch experiments.
pub const STEPS_PER_DELTA: usize = 100;
pub const MIN_PATHS: usize = 10_000;
pub const MIN_WINDOW: usize = 20;

/// Location, width and inverse height `1/M` of the bump in the diffusion coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub center: f64,
    pub width: f64,
    pub inv_m: f64,
}

impl Perturbation {
    pub fn of(pair: &HypothesisPair) -> Self {
        Self { center: pair.eval_point, width: pair.h_n, inv_m: 1.0 / pair.m_n }
    }

    /// The `M = infinity` limit: no perturbation at all.
    pub fn null(center: f64, width: f64) -> Self {
        Self { center, width, inv_m: 0.0 }
    }

    /// `[psi_h, psi_h', psi_h'']` at `x` in original units.
    #[inline]
    pub fn profile(&self, x: f64) -> [f64; 3] {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            return [0.0; 3];
        }
        let d = BumpFunction::shared().derivatives(u);
        [d[0], d[1] / self.width, d[2] / (self.width * self.width)]
    }

    /// Upper bound on `sup_{t <= delta} |log Y_t|` valid for continuous paths.
    ///
    /// With `G' = psi_h'/a`, Ito's formula turns `int psi_h'(X) dB` into
    /// `G(X_t) - G(x0) - (1/2) int (psi_h'/a)'(X) a(X)^2 ds`; the first part is bounded by the
    /// total variation of `psi` over `1 - amp`, the second by `t` times derivative bounds.
    pub fn log_y_bound(&self, epsilon: f64, delta: f64) -> f64 {
        let bump = BumpFunction::shared();
        let p = bump.sup_norms();
        let amp = epsilon * self.inv_m;
        let h2 = self.width * self.width;
        let lower = 1.0 - amp;
        let ito = 0.5 * delta * (1.0 + amp).powi(2) * (p[2] / lower + amp * p[1] * p[1] / (lower * lower)) / h2;
        let stochastic = bump.total_variation() / lower + ito;
        amp * stochastic + 0.5 * amp * amp * p[1] * p[1] * delta / h2
    }
}

/// Fine-grid trajectory of `(X, B, Y, Xdot)` on `[0, delta]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedPath {
    pub times: Vec<f64>,
    pub x_values: Vec<f64>,
    pub brownian: Vec<f64>,
    pub increments: Vec<f64>,
    pub y_values: Vec<f64>,
    pub xdot_values: Vec<f64>,
    pub epsilon: f64,
    pub x0: f64,
    pub delta: f64,
    pub perturbation: Perturbation,
}

/// Leading-order weight and its two parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSample {
    pub w_leading: f64,
    pub w1_main: f64,
    pub w2_main: f64,
    pub x_delta: f64,
    pub x0: f64,
}

struct Outcome {
    sample: WeightSample,
    escaped: bool,
}

fn step_count(delta: f64, dt: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(dt > 0.0 && dt <= delta / 100.0 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!("dt = {dt} must be at most delta/100")));
    }
    Ok(((delta / dt) * (1.0 - 1e-12)).ceil() as usize)
}

/// Joint Euler scheme for `(X, Xdot)` with Ito sums for the weight; records the path if asked.
fn drive(
    pert: &Perturbation,
    epsilon: f64,
    x0: f64,
    delta: f64,
    steps: usize,
    rng: &mut RngStream,
    mut record: Option<&mut AugmentedPath>,
) -> Result<Outcome> {
    let dt = delta / steps as f64;
    let sq = dt.sqrt();
    let amp = epsilon * pert.inv_m;
    let (mut x, mut xdot, mut b) = (x0, 0.0, 0.0);
    let (mut s1, mut s2, mut i1, mut i2) = (0.0, 0.0, 0.0, 0.0);
    let mut escaped = false;
    let mut pk = pert.profile(x);
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        let db = sq * rng.normal();
        let x_new = x + (1.0 + amp * pk[0]) * db;
        xdot += amp * pk[1] * xdot * db + pert.inv_m * pk[0] * db;
        s1 += pk[1] * db;
        i1 += pk[0] * db;
        b += db;
        let pn = pert.profile(x_new);
        s2 += 0.5 * (pk[1] * pk[1] + pn[1] * pn[1]) * dt;
        i2 += 0.5 * (pk[2] * t0 + pn[2] * t1) * dt;
        x = x_new;
        pk = pn;
        if !(x.abs() <= BLOWUP) {
            return Err(Error::NumericalBlowup { time: t1, value: x.abs() });
        }
        escaped |= (x - pert.center).abs() > 1.0;
        if let Some(path) = record.as_deref_mut() {
            path.times.push(t1);
            path.x_values.push(x);
            path.brownian.push(b);
            path.increments.push(db);
            path.y_values.push((amp * s1 - 0.5 * amp * amp * s2).exp());
            path.xdot_values.push(xdot);
        }
    }
    let w1 = pert.inv_m * i1 * b / delta;
    let w2 = pert.inv_m * i2 / (2.0 * delta);
    Ok(Outcome { sample: WeightSample { w_leading: w1 + w2, w1_main: w1, w2_main: w2, x_delta: x, x0 }, escaped })
}

/// Simulates the augmented path on `[0, delta]` with fine step `dt <= delta/100`.
pub fn simulate_augmented(
    pert: &Perturbation,
    epsilon: f64,
    x0: f64,
    delta: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<AugmentedPath> {
    let steps = step_count(delta, dt)?;
    let mut path = AugmentedPath {
        times: Vec::with_capacity(steps + 1),
        x_values: Vec::with_capacity(steps + 1),
        brownian: Vec::with_capacity(steps + 1),
        increments: Vec::with_capacity(steps),
        y_values: Vec::with_capacity(steps + 1),
        xdot_values: Vec::with_capacity(steps + 1),
        epsilon,
        x0,
        delta,
        perturbation: *pert,
    };
    path.times.push(0.0);
    path.x_values.push(x0);
    path.brownian.push(0.0);
    path.y_values.push(1.0);
    path.xdot_values.push(0.0);
    drive(pert, epsilon, x0, delta, steps, rng, Some(&mut path))?;
    Ok(path)
}

/// `D_s X_delta = Y_delta / Y_s (1 + epsilon psi_h(X_s)/M)` at the grid node nearest to `s`.
pub fn malliavin_derivative(path: &AugmentedPath, s: f64) -> f64 {
    let steps = path.increments.len();
    let k = ((s / path.delta * steps as f64).round().max(0.0) as usize).min(steps);
    let amp = path.epsilon * path.perturbation.inv_m;
    let y_end = *path.y_values.last().expect("non-empty path");
    y_end / path.y_values[k] * (1.0 + amp * path.perturbation.profile(path.x_values[k])[0])
}

/// Leading weight `w1 + w2` with `w1 = (1/delta)(int psi_h/M dB) B_delta` and
/// `w2 = (1/(2 delta M)) int psi_h''(X_s) s ds`.
pub fn leading_weight(path: &AugmentedPath) -> WeightSample {
    let pert = &path.perturbation;
    let steps = path.increments.len();
    let dt = path.delta / steps as f64;
    let (mut b, mut i1, mut i2) = (0.0, 0.0, 0.0);
    let mut pk = pert.profile(path.x_values[0]);
    for k in 0..steps {
        let db = path.increments[k];
        i1 += pk[0] * db;
        b += db;
        let pn = pert.profile(path.x_values[k + 1]);
        i2 += 0.5 * (pk[2] * (k as f64 * dt) + pn[2] * ((k + 1) as f64 * dt)) * dt;
        pk = pn;
    }
    let w1 = pert.inv_m * i1 * b / path.delta;
    let w2 = pert.inv_m * i2 / (2.0 * path.delta);
    WeightSample { w_leading: w1 + w2, w1_main: w1, w2_main: w2, x_delta: path.x_values[steps], x0: path.x0 }
}

/// Weight samples of many independent paths.
#[derive(Clone, Debug)]
pub struct WeightBatch {
    pub samples: Vec<WeightSample>,
    /// Paths that left `[x* - 1, x* + 1]`.
    pub escaped: usize,
}

impl WeightBatch {
    pub fn mean_and_stderr(&self) -> (f64, f64) {
        let w: Vec<f64> = self.samples.iter().map(|s| s.w_leading).collect();
        (stats::mean(&w), stats::std_error(&w))
    }
}

/// Simulates `paths` weights with `x0` drawn from `init`, using `delta/100` fine steps.
pub fn sample_weights(
    pert: &Perturbation,
    epsilon: f64,
    delta: f64,
    init: &InitialState,
    paths: usize,
    seed: u64,
) -> Result<WeightBatch> {
    let steps = step_count(delta, delta / STEPS_PER_DELTA as f64)?;
    let outcomes = replicate(paths, seed, TAG_PATHS, |_, rng| {
        let x0 = match init {
            InitialState::Stationary(d) => d.sample(rng),
            InitialState::Fixed(x) => *x,
        };
        drive(pert, epsilon, x0, delta, steps, rng, None)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let escaped = outcomes.iter().filter(|o| o.escaped).count();
    Ok(WeightBatch { samples: outcomes.into_iter().map(|o| o.sample).collect(), escaped })
}

/// `2 * sd(x) * len^(-1/5)`.
pub fn default_regression_bandwidth(x: &[f64]) -> f64 {
    2.0 * stats::variance(x).sqrt() * (x.len() as f64).powf(-0.2)
}

/// Box-kernel windows over data sorted by abscissa, with optional multiplicities.
struct SortedWindows {
    x: Vec<f64>,
    prefix_w: Vec<f64>,
    prefix_w2: Vec<f64>,
    prefix_c: Vec<f64>,
}

impl SortedWindows {
    fn new(x: Vec<f64>, w: &[f64], mult: Option<&[u32]>) -> Self {
        let n = x.len();
        let (mut pw, mut pw2, mut pc) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
        for i in 0..n {
            let c = mult.map_or(1.0, |m| m[i] as f64);
            pw[i + 1] = pw[i] + c * w[i];
            pw2[i + 1] = pw2[i] + c * w[i] * w[i];
            pc[i + 1] = pc[i] + c;
        }
        Self { x, prefix_w: pw, prefix_w2: pw2, prefix_c: pc }
    }

    /// `(count, sum w, sum w^2)` over `|x - q| <= bw`.
    fn window(&self, q: f64, bw: f64) -> (f64, f64, f64) {
        let lo = self.x.partition_point(|v| *v < q - bw);
        let hi = self.x.partition_point(|v| *v <= q + bw);
        (
            self.prefix_c[hi] - self.prefix_c[lo],
            self.prefix_w[hi] - self.prefix_w[lo],
            self.prefix_w2[hi] - self.prefix_w2[lo],
        )
    }
}

fn sorted_pairs(samples: &[WeightSample]) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].x_delta.total_cmp(&samples[b].x_delta).then(a.cmp(&b)));
    (order.iter().map(|&i| samples[i].x_delta).collect(), order.iter().map(|&i| samples[i].w_leading).collect())
}

fn quantile_sorted(x: &[f64], p: f64) -> f64 {
    let pos = p * (x.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < x.len() {
        x[i] * (1.0 - f) + x[i + 1] * f
    } else {
        x[i]
    }
}

fn mean_fitted_square(win: &SortedWindows, mult: Option<&[u32]>, bw: f64) -> f64 {
    let mut acc = stats::KahanSum::default();
    for (i, &x) in win.x.iter().enumerate() {
        let c = mult.map_or(1.0, |m| m[i] as f64);
        if c == 0.0 {
            continue;
        }
        let (count, s, _) = win.window(x, bw);
        let m = s / count;
        acc.add(c * m * m);
    }
    acc.value() / win.prefix_c[win.x.len()]
}

/// Estimate of `E[(E[W | X_delta])^2]` with its bootstrap standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMoment {
    pub n: u64,
    pub delta: f64,
    pub h_n: f64,
    pub m_n: f64,
    pub epsilon: f64,
    pub estimate: f64,
    pub estimate_se: f64,
    /// `estimate * M_n^2 / h_n`.
    pub scaled: f64,
    pub escaped: usize,
}

impl ConditionalMoment {
    pub fn write_csv<W: Write>(rows: &[ConditionalMoment], out: &mut W) -> io::Result<()> {
        writeln!(out, "n,delta,h_n,M_n,epsilon,estimate,estimate_se,scaled")?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n,
                real(r.delta),
                real(r.h_n),
                real(r.m_n),
                real(r.epsilon),
                real(r.estimate),
                real(r.estimate_se),
                real(r.scaled)
            )?;
        }
        Ok(())
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 100;

/// Nadaraya-Watson estimate of `E[(E[W | X_delta])^2]` from `paths` paths started at `init`,
/// returning `(estimate, bootstrap stderr, escaped paths)`.
pub fn conditional_second_moment_with(
    pert: &Perturbation,
    init: &InitialState,
    epsilon: f64,
    delta: f64,
    paths: usize,
    regression_bandwidth: f64,
    seed: u64,
) -> Result<(f64, f64, usize)> {
    if paths < MIN_PATHS {
        return Err(Error::Precondition(format!("at least {MIN_PATHS} paths are required, got {paths}")));
    }
    if !(regression_bandwidth > 0.0) {
        return Err(Error::Precondition("regression bandwidth must be positive".into()));
    }
    let batch = sample_weights(pert, epsilon, delta, init, paths, seed)?;
    let (x, w) = sorted_pairs(&batch.samples);
    let win = SortedWindows::new(x.clone(), &w, None);
    let (q_lo, q_hi) = (quantile_sorted(&x, 0.01), quantile_sorted(&x, 0.99));
    for &xi in x.iter().filter(|v| **v >= q_lo && **v <= q_hi) {
        let count = win.window(xi, regression_bandwidth).0 as usize;
        if count < MIN_WINDOW {
            return Err(Error::InsufficientSupport { x: xi, count });
        }
    }
    let estimate = mean_fitted_square(&win, None, regression_bandwidth);
    let mut rng = RngStream::new(derive_seed(seed, 0, TAG_BOOTSTRAP));
    let n = x.len();
    let resampled: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let mut mult = vec![0u32; n];
            for _ in 0..n {
                mult[rng.below(n)] += 1;
            }
            let boot = SortedWindows::new(x.clone(), &w, Some(&mult));
            mean_fitted_square(&boot, Some(&mult), regression_bandwidth)
        })
        .collect();
    let b = resampled.len() as f64;
    let se = (stats::variance(&resampled) * b / (b - 1.0)).sqrt();
    Ok((estimate, se, batch.escaped))
}

/// Conditional second moment of the leading weight with `x0` drawn from the stationary law of
/// the `epsilon` model.
pub fn conditional_second_moment(
    pair: &HypothesisPair,
    epsilon: f64,
    delta: f64,
    paths: usize,
    regression_bandwidth: f64,
    seed: u64,
) -> Result<ConditionalMoment> {
    let init = InitialState::Stationary(Arc::new(pair.stationary(epsilon)?));
    let (estimate, estimate_se, escaped) =
        conditional_second_moment_with(&Perturbation::of(pair), &init, epsilon, delta, paths, regression_bandwidth, seed)?;
    Ok(ConditionalMoment {
        n: pair.n,
        delta,
        h_n: pair.h_n,
        m_n: pair.m_n,
        epsilon,
        estimate,
        estimate_se,
        scaled: estimate * pair.m_n * pair.m_n / pair.h_n,
        escaped,
    })
}

/// One grid point of the score comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreRow {
    pub y: f64,
    pub score_reg: f64,
    pub score_fd: f64,
    pub se_reg: f64,
    pub se_fd: f64,
    /// Kernel density estimate of `X_delta` at `y` for the central `epsilon`.
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreCheck {
    pub rows: Vec<ScoreRow>,
    pub bandwidth: f64,
    pub escaped: usize,
    pub paths: usize,
}

impl ScoreCheck {
    /// Fraction of grid points whose `z`-standard-error bands intersect.
    pub fn overlap_fraction(&self, z: f64) -> f64 {
        let hits = self
            .rows
            .iter()
            .filter(|r| (r.score_reg - r.score_fd).abs() <= z * (r.se_reg + r.se_fd))
            .count();
        hits as f64 / self.rows.len() as f64
    }

    /// Pearson correlation of the two score columns.
    pub fn correlation(&self) -> f64 {
        let a: Vec<f64> = self.rows.iter().map(|r| r.score_reg).collect();
        let b: Vec<f64> = self.rows.iter().map(|r| r.score_fd).collect();
        let (ma, mb) = (stats::mean(&a), stats::mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    /// Trapezoid integral of `score_reg * density` over the grid.
    pub fn weighted_integral(&self) -> f64 {
        let y: Vec<f64> = self.rows.iter().map(|r| r.y).collect();
        let f: Vec<f64> = self.rows.iter().map(|r| r.score_reg * r.density).collect();
        crate::quadrature::trapezoid(&y, &f)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "y,score_reg,score_fd,se_reg,se_fd")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", real(r.y), real(r.score_reg), real(r.score_fd), real(r.se_reg), real(r.se_fd))?;
        }
        Ok(())
    }
}

pub const SCORE_GRID_POINTS: usize = 41;

/// How the two endpoint batches of the finite difference are driven.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdCoupling {
    /// Independent noise for `epsilon + d_eps` and `epsilon - d_eps`.
    Independent,
    /// The same Brownian increments for both, path by path.
    Common,
}

/// Compares the regression of the leading weight on the endpoint with a finite difference in
/// `epsilon` of the log endpoint density, over the central 90% of the endpoint law.
pub fn score_check(
    pert: &Perturbation,
    epsilon: f64,
    d_eps: f64,
    delta: f64,
    x0: f64,
    paths: usize,
    seed: u64,
) -> Result<ScoreCheck> {
    score_check_with(pert, epsilon, d_eps, delta, x0, paths, seed, FdCoupling::Independent)
}

/// [`score_check`] with a choice of coupling between the finite-difference batches.
#[allow(clippy::too_many_arguments)]
pub fn score_check_with(
    pert: &Perturbation,
    epsilon: f64,
    d_eps: f64,
    delta: f64,
    x0: f64,
    paths: usize,
    seed: u64,
    coupling: FdCoupling,
) -> Result<ScoreCheck> {
    if !(d_eps > 0.0 && d_eps <= 0.1) {
        return Err(Error::Precondition(format!("d_eps must lie in (0, 0.1], got {d_eps}")));
    }
    if !(epsilon - d_eps >= 0.0 && epsilon + d_eps <= 1.0) {
        return Err(Error::Precondition("epsilon +- d_eps must stay in [0, 1]".into()));
    }
    if (x0 - pert.center).abs() > delta.powf(0.4) {
        return Err(Error::Precondition(format!("|x0 - x*| must not exceed delta^0.4 = {}", delta.powf(0.4))));
    }
    if paths < 2 * MIN_WINDOW {
        return Err(Error::Precondition(format!("at least {} paths are required", 2 * MIN_WINDOW)));
    }
    let init = InitialState::Fixed(x0);
    let minus_tag = match coupling {
        FdCoupling::Independent => TAG_MINUS,
        FdCoupling::Common => TAG_PLUS,
    };
    let central = sample_weights(pert, epsilon, delta, &init, paths, derive_seed(seed, 0, TAG_PATHS))?;
    let plus = sample_weights(pert, epsilon + d_eps, delta, &init, paths, derive_seed(seed, 0, TAG_PLUS))?;
    let minus = sample_weights(pert, epsilon - d_eps, delta, &init, paths, derive_seed(seed, 0, minus_tag))?;

    let (x, w) = sorted_pairs(&central.samples);
    let bw = default_regression_bandwidth(&x);
    let win = SortedWindows::new(x.clone(), &w, None);
    let endpoints = |b: &WeightBatch| {
        let mut e: Vec<f64> = b.samples.iter().map(|s| s.x_delta).collect();
        e.sort_by(f64::total_cmp);
        let zeros = vec![0.0; e.len()];
        SortedWindows::new(e, &zeros, None)
    };
    let (win_p, win_m) = (endpoints(&plus), endpoints(&minus));
    let (lo, hi) = (quantile_sorted(&x, 0.05), quantile_sorted(&x, 0.95));
    let n = paths as f64;
    let mut rows = Vec::with_capacity(SCORE_GRID_POINTS);
    for j in 0..SCORE_GRID_POINTS {
        let y = lo + (hi - lo) * j as f64 / (SCORE_GRID_POINTS - 1) as f64;
        let (c, s, s2) = win.window(y, bw);
        let (cp, cm) = (win_p.window(y, bw).0, win_m.window(y, bw).0);
        let smallest = c.min(cp).min(cm);
        if smallest < MIN_WINDOW as f64 {
            return Err(Error::InsufficientSupport { x: y, count: smallest as usize });
        }
        let mean = s / c;
        let var = (s2 / c - mean * mean).max(0.0) * c / (c - 1.0);
        let se_fd = match coupling {
            FdCoupling::Independent => {
                let se_log = |k: f64| ((1.0 - k / n) / k).sqrt();
                (se_log(cp).powi(2) + se_log(cm).powi(2)).sqrt() / (2.0 * d_eps)
            }
            FdCoupling::Common => {
                let hit = |v: f64| if (v - y).abs() <= bw { 1.0 } else { 0.0 };
                let diffs: Vec<f64> =
                    plus.samples.iter().zip(&minus.samples).map(|(a, b)| hit(a.x_delta) - hit(b.x_delta)).collect();
                let pooled = 0.5 * (cp + cm);
                (n * stats::variance(&diffs)).sqrt() / (pooled * 2.0 * d_eps)
            }
        };
        rows.push(ScoreRow {
            y,
            score_reg: mean,
            score_fd: (cp.ln() - cm.ln()) / (2.0 * d_eps),
            se_reg: (var / c).sqrt(),
            se_fd,
            density: c / (n * 2.0 * bw),
        });
    }
    Ok(ScoreCheck { rows, bandwidth: bw, escaped: central.escaped, paths })
}
