//! Replicated Monte Carlo experiments on the pointwise risk of the kernel estimator.

use std::io::{self, Write};
use std::sync::Arc;

use crate::diffusion::{build_stationary, DiffusionModel};
use crate::error::{Error, Result};
use crate::kernel::{bandwidth_rule, build_kernel, classify_regime, estimate_density, EstimatorConfig, Kernel, Regime};
use crate::output::real;
use crate::rng::{derive_seed, replicate};
use crate::simulator::{sample_discrete, InitialState, SamplingScheme};
use crate::stats;

const TAG_ROW: u32 = 11;
const TAG_REPLICATE: u32 = 12;
const TAG_BOOTSTRAP: u32 = 13;
const TAG_VARIANCE: u32 = 14;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const MIN_REPLICATES: usize = 30;

/// How the sampling step depends on the sample size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    Constant(f64),
    /// `delta = scale * n^(-exponent)`.
    PowerLaw { scale: f64, exponent: f64 },
}

impl DeltaRule {
    pub fn delta(&self, n: usize) -> f64 {
        match *self {
            DeltaRule::Constant(d) => d,
            DeltaRule::PowerLaw { scale, exponent } => scale * (n as f64).powf(-exponent),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RateExperimentConfig {
    pub model: DiffusionModel,
    pub beta: f64,
    pub eval_point: f64,
    pub n_grid: Vec<usize>,
    pub delta_rule: DeltaRule,
    pub replicates: usize,
    pub master_seed: u64,
    pub kernel_order: usize,
    /// Euler steps per observation interval; `None` uses the default rule.
    pub substeps: Option<usize>,
}

impl RateExperimentConfig {
    fn check(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::Precondition(format!(
                "at least {MIN_REPLICATES} replicates are required, got {}",
                self.replicates
            )));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[1] <= w[0]) || self.n_grid[0] == 0 {
            return Err(Error::Precondition("n_grid must be nonempty, positive and increasing".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Precondition("beta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseRow {
    pub n: usize,
    pub delta: f64,
    pub horizon: f64,
    pub h: f64,
    pub regime: Regime,
    pub mse: f64,
    pub mse_stderr: f64,
    pub mean_bias: f64,
    pub variance: f64,
    /// Replicates lost to numerical blow-up.
    pub failures: usize,
    /// Set when more than 1% of replicates failed; the statistics are then NaN.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseTable {
    pub rows: Vec<MseRow>,
    /// The quadrature value of `pi(x*)` used as truth.
    pub truth: f64,
}

impl MseTable {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "n,delta,T,h,regime,mse,mse_stderr,bias,variance")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                real(r.delta),
                real(r.horizon),
                real(r.h),
                r.regime,
                real(r.mse),
                real(r.mse_stderr),
                real(r.mean_bias),
                real(r.variance)
            )?;
        }
        Ok(())
    }

    pub fn has_flagged_rows(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// Simulates `replicates` stationary trajectories per grid size and records the risk of the
/// estimator at the evaluation point.
pub fn run_mse_experiment(config: &RateExperimentConfig) -> Result<MseTable> {
    config.check()?;
    let density = Arc::new(build_stationary(&config.model, 1e-12)?);
    let truth = density.density(config.eval_point);
    let kernel = build_kernel(config.kernel_order)?;
    let init = InitialState::Stationary(density);
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for (r, &n) in config.n_grid.iter().enumerate() {
        let delta = config.delta_rule.delta(n);
        let scheme = match config.substeps {
            Some(s) => SamplingScheme::new(n, delta, s)?,
            None => SamplingScheme::with_default_substeps(n, delta)?,
        };
        let h = bandwidth_rule(n, delta, config.beta);
        let regime = classify_regime(n, delta, config.beta).label;
        let estimator = EstimatorConfig::new(config.eval_point, h, kernel.clone())?;
        let row_seed = derive_seed(config.master_seed, r as u64, TAG_ROW);
        let outcomes = replicate(config.replicates, row_seed, TAG_REPLICATE, |_, rng| {
            sample_discrete(&config.model, &scheme, &init, rng).map(|s| estimate_density(&s, &estimator))
        });
        let estimates: Vec<f64> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
        let failures = outcomes.len() - estimates.len();
        let mut row = MseRow {
            n,
            delta,
            horizon: scheme.horizon(),
            h,
            regime,
            mse: f64::NAN,
            mse_stderr: f64::NAN,
            mean_bias: f64::NAN,
            variance: f64::NAN,
            failures,
            flagged: failures * 100 > config.replicates,
        };
        if !row.flagged {
            let sq: Vec<f64> = estimates.iter().map(|e| (e - truth) * (e - truth)).collect();
            row.mse = stats::mean(&sq);
            row.mean_bias = stats::mean(&estimates) - truth;
            row.variance = stats::variance(&estimates);
            row.mse_stderr = stats::bootstrap_stderr(
                &sq,
                BOOTSTRAP_RESAMPLES,
                derive_seed(config.master_seed, r as u64, TAG_BOOTSTRAP),
                stats::mean,
            );
        }
        rows.push(row);
    }
    Ok(MseTable { rows, truth })
}

/// Abscissa of the log-log regression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitAxis {
    SampleSize,
    Horizon,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl RateFit {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "slope,slope_stderr,intercept,r2")?;
        writeln!(
            out,
            "{},{},{},{}",
            real(self.slope),
            real(self.slope_stderr),
            real(self.intercept),
            real(self.r_squared)
        )
    }
}

/// Least-squares slope of `log mse` against `log n`.
pub fn fit_rate_exponent(table: &MseTable) -> Result<RateFit> {
    fit_rate_exponent_against(table, FitAxis::SampleSize)
}

/// Least-squares slope of `log mse` against `log n` or `log T`.
///
/// With exactly two usable rows the slope is exact and its standard error is NaN.
pub fn fit_rate_exponent_against(table: &MseTable, axis: FitAxis) -> Result<RateFit> {
    let usable: Vec<&MseRow> = table.rows.iter().filter(|r| r.mse.is_finite() && r.mse > 0.0).collect();
    let x: Vec<f64> = usable
        .iter()
        .map(|r| match axis {
            FitAxis::SampleSize => (r.n as f64).ln(),
            FitAxis::Horizon => r.horizon.ln(),
        })
        .collect();
    let y: Vec<f64> = usable.iter().map(|r| r.mse.ln()).collect();
    if x.iter().all(|v| Some(v) == x.first()) {
        return Err(Error::DegenerateFit);
    }
    let fit = stats::ols(&x, &y).ok_or(Error::DegenerateFit)?;
    Ok(RateFit { slope: fit.slope, slope_stderr: fit.slope_stderr, intercept: fit.intercept, r_squared: fit.r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceRow {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub empirical_variance: f64,
    /// `1/T + delta/(T h)`.
    pub bound_shape: f64,
    pub ratio: f64,
}

/// Empirical variance of the estimator against the shape `1/T + delta/(T h)` of its bound.
///
/// Grid points sharing `(n, delta)` reuse the same simulated trajectories.
pub fn variance_bound_check(
    model: &DiffusionModel,
    grid: &[(usize, f64, f64)],
    kernel: &Kernel,
    eval_point: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<VarianceRow>> {
    if grid.is_empty() {
        return Err(Error::Precondition("variance grid is empty".into()));
    }
    if replicates < 2 {
        return Err(Error::Precondition("need at least two replicates".into()));
    }
    let init = InitialState::Stationary(Arc::new(build_stationary(model, 1e-12)?));
    let mut groups: Vec<(usize, f64)> = Vec::new();
    for &(n, d, _) in grid {
        if !groups.iter().any(|&(m, e)| m == n && e == d) {
            groups.push((n, d));
        }
    }
    let mut rows = vec![None; grid.len()];
    for (g, &(n, delta)) in groups.iter().enumerate() {
        let scheme = SamplingScheme::with_default_substeps(n, delta)?;
        let members: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].0 == n && grid[i].1 == delta).collect();
        let configs = members
            .iter()
            .map(|&i| EstimatorConfig::new(eval_point, grid[i].2, kernel.clone()))
            .collect::<Result<Vec<_>>>()?;
        let estimates = replicate(replicates, derive_seed(seed, g as u64, TAG_VARIANCE), TAG_REPLICATE, |_, rng| {
            sample_discrete(model, &scheme, &init, rng).map(|s| configs.iter().map(|c| estimate_density(&s, c)).collect::<Vec<_>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let t = scheme.horizon();
        for (j, &i) in members.iter().enumerate() {
            let column: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
            let m = replicates as f64;
            let empirical_variance = stats::variance(&column) * m / (m - 1.0);
            let h = grid[i].2;
            let bound_shape = 1.0 / t + delta / (t * h);
            rows[i] = Some(VarianceRow { n, delta, h, empirical_variance, bound_shape, ratio: empirical_variance / bound_shape });
        }
    }
    Ok(rows.into_iter().map(|r| r.expect("every grid point belongs to a group")).collect())
}

/// Writes variance rows as CSV.
pub fn write_variance_csv<W: Write>(rows: &[VarianceRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "n,delta,h,empirical_variance,bound_shape,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            real(r.delta),
            real(r.h),
            real(r.empirical_variance),
            real(r.bound_shape),
            real(r.ratio)
        )?;
    }
    Ok(())
}

/// Largest relative gap between `mse` and `mean_bias^2 + variance` over unflagged rows.
pub fn decomposition_defect(table: &MseTable) -> f64 {
    table
        .rows
        .iter()
        .filter(|r| !r.flagged)
        .map(|r| ((r.mse - (r.mean_bias * r.mean_bias + r.variance)) / r.mse).abs())
        .fold(0.0, f64::max)
}
