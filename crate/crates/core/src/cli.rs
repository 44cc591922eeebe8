//! Configuration files, command dispatch and artifact bookkeeping behind the `difflab` binary.
//!
//! A configuration is flat `key = value` text with `#` comments; lists are comma separated and
//! may be wrapped in brackets. Model parameters use the `model.` prefix, for example
//! `model = ou` and `model.theta = 2`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::diffusion::{build_stationary, make_reference_model, DiffusionModel, ModelFamily, ModelParams};
use crate::error::{Error, Result};
use crate::kernel::{bandwidth_rule, build_kernel, classify_regime, estimate_density, EstimatorConfig};
use crate::local_time::{bound_sweep, fitted_constant, scaling_sweep, standard_geometries, write_bound_csv, write_scaling_csv};
use crate::lower_bound::{build_hypothesis_pair, hellinger_report, write_hellinger_csv, HypothesisPair};
use crate::malliavin::{conditional_second_moment, score_check, ConditionalMoment, Perturbation};
use crate::output::real;
use crate::rates::{fit_rate_exponent_against, run_mse_experiment, DeltaRule, FitAxis, RateExperimentConfig};
use crate::rng::{derive_seed, RngStream};
use crate::simulator::{sample_discrete, InitialState, SamplingScheme};

pub const MANIFEST: &str = "manifest.txt";
pub const FAILED_MARKER: &str = "run.failed";

const TAG_COMMAND: u32 = 51;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Density,
    Estimate,
    Rates,
    LowerBound,
    Malliavin,
    LocalTime,
}

impl Command {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "density" => Command::Density,
            "estimate" => Command::Estimate,
            "rates" => Command::Rates,
            "lowerbound" => Command::LowerBound,
            "malliavin" => Command::Malliavin,
            "localtime" => Command::LocalTime,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Estimate => "estimate",
            Command::Rates => "rates",
            Command::LowerBound => "lowerbound",
            Command::Malliavin => "malliavin",
            Command::LocalTime => "localtime",
        }
    }

    fn scope(self) -> &'static str {
        match self {
            Command::Density => "class membership checked on a finite grid for this model only",
            Command::Estimate => "single trajectory; the truth is the quadrature stationary density",
            Command::Rates => "supremum over the class checked at this representative model only",
            Command::LowerBound => "initial-law Hellinger term only; transition terms are not simulated",
            Command::Malliavin => "leading-order weight only; remainder terms are omitted",
            Command::LocalTime => "the fitted constant covers the tested geometries only",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), reason: reason.into() }
}

/// Parses flat `key = value` text; later duplicates override earlier ones.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(&format!("line {}", i + 1), "expected `key = value`"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_error(&format!("line {}", i + 1), "empty key"));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// A validated command invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Reads `command` and `seed` from the text; `seed_override` takes precedence over `seed`.
    pub fn from_text(text: &str, seed_override: Option<u64>, output_dir: PathBuf) -> Result<Self> {
        let params = parse_config_text(text)?;
        let name = params.get("command").ok_or_else(|| config_error("command", "missing"))?;
        let command = Command::from_name(name).ok_or_else(|| config_error("command", format!("unknown command `{name}`")))?;
        let master_seed = match seed_override {
            Some(s) => s,
            None => {
                let s = params.get("seed").ok_or_else(|| config_error("seed", "missing (set it or pass --seed)"))?;
                s.parse().map_err(|_| config_error("seed", format!("expected an unsigned integer, got `{s}`")))?
            }
        };
        let config = Self { command, params, master_seed, output_dir };
        plan(&config)?;
        Ok(config)
    }

    pub fn from_file(path: &Path, seed_override: Option<u64>, output_dir: PathBuf) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_error("--config", format!("{}: {e}", path.display())))?;
        Self::from_text(&text, seed_override, output_dir)
    }

    fn keys(&self) -> Keys<'_> {
        Keys(&self.params)
    }
}

struct Keys<'a>(&'a BTreeMap<String, String>);

impl Keys<'_> {
    fn text(&self, key: &str) -> Result<&str> {
        self.0.get(key).map(String::as_str).ok_or_else(|| config_error(key, "missing"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| config_error(key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn real(&self, key: &str) -> Result<f64> {
        self.parse(key, "a real number")?.ok_or_else(|| config_error(key, "missing"))
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parse(key, "a real number")?.unwrap_or(default))
    }

    fn count(&self, key: &str) -> Result<usize> {
        self.parse(key, "a nonnegative integer")?.ok_or_else(|| config_error(key, "missing"))
    }

    fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parse(key, "a nonnegative integer")?.unwrap_or(default))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.parse(key, "true or false")?.unwrap_or(false))
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<Vec<T>>> {
        let Some(raw) = self.0.get(key) else { return Ok(None) };
        let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
        inner
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| config_error(key, format!("expected a list of {what}, got `{raw}`"))))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn counts(&self, key: &str) -> Result<Vec<usize>> {
        self.list(key, "nonnegative integers")?.ok_or_else(|| config_error(key, "missing"))
    }

    fn reals_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        Ok(self.list(key, "real numbers")?.unwrap_or_else(|| default.to_vec()))
    }

    fn model(&self, beta: Option<f64>) -> Result<DiffusionModel> {
        let name = self.text("model")?;
        let family = ModelFamily::from_name(name).ok_or_else(|| config_error("model", format!("unknown model `{name}`")))?;
        let mut params = ModelParams::new();
        for (k, v) in self.0.range("model.".to_string()..) {
            let Some(p) = k.strip_prefix("model.") else { break };
            let value = v.parse().map_err(|_| config_error(k, format!("expected a real number, got `{v}`")))?;
            params.set(p, value);
        }
        if let (Some(b), None) = (beta, params.get("beta")) {
            params.set("beta", b);
        }
        make_reference_model(family, &params).map_err(|e| config_error("model", e.to_string()))
    }
}

#[derive(Clone, Debug)]
enum Plan {
    Density {
        model: DiffusionModel,
        points: usize,
    },
    Estimate {
        model: DiffusionModel,
        n: usize,
        delta: f64,
        beta: f64,
        kernel_order: usize,
        eval_point: f64,
        bandwidth: Option<f64>,
    },
    Rates {
        config: Box<RateExperimentConfig>,
        axis: FitAxis,
    },
    LowerBound {
        pairs: Vec<HypothesisPair>,
    },
    Malliavin {
        pair: Box<HypothesisPair>,
        epsilon: f64,
        delta: f64,
        paths: usize,
        regression_bandwidth: f64,
        score: Option<(f64, f64, usize)>,
    },
    LocalTime {
        sigma: f64,
        eta: f64,
        betas: Vec<f64>,
        replicates: usize,
        steps: usize,
        band_factor: f64,
    },
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(key, format!("must be positive, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(config_error(key, format!("must be at least {min}, got {v}")))
    }
}

fn pair_from(keys: &Keys<'_>, n: u64) -> Result<HypothesisPair> {
    let beta = keys.real_or("beta", 3.0)?;
    let alpha0 = keys.real_or("alpha0", 0.5)?;
    let eta = keys.real_or("eta", 1.0)?;
    let a_scale = keys.real_or("A", 2.0)?;
    let x_star = keys.real_or("x_star", 0.0)?;
    build_hypothesis_pair(n, beta, alpha0, eta, a_scale, x_star)
}

/// Validates every key the command needs before anything runs.
fn plan(config: &RunConfig) -> Result<Plan> {
    let k = config.keys();
    Ok(match config.command {
        Command::Density => Plan::Density { model: k.model(None)?, points: at_least("points", k.count_or("points", 401)?, 2)? },
        Command::Estimate => {
            let beta = positive("beta", k.real("beta")?)?;
            Plan::Estimate {
                model: k.model(Some(beta))?,
                n: at_least("n", k.count("n")?, 1)?,
                delta: positive("delta", k.real("delta")?)?,
                beta,
                kernel_order: at_least("kernel_order", k.count_or("kernel_order", beta.ceil() as usize)?, 1)?,
                eval_point: k.real_or("eval_point", 0.0)?,
                bandwidth: match k.parse::<f64>("bandwidth", "a real number")? {
                    Some(h) => Some(positive("bandwidth", h)?),
                    None => None,
                },
            }
        }
        Command::Rates => {
            let beta = positive("beta", k.real("beta")?)?;
            let delta_rule = match k.text("delta_rule")? {
                "constant" => DeltaRule::Constant(positive("delta", k.real("delta")?)?),
                "power" => DeltaRule::PowerLaw {
                    scale: positive("delta_scale", k.real_or("delta_scale", 1.0)?)?,
                    exponent: k.real("delta_exponent")?,
                },
                other => return Err(config_error("delta_rule", format!("expected `constant` or `power`, got `{other}`"))),
            };
            let n_grid = k.counts("n_grid")?;
            if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_error("n_grid", "must be positive and strictly increasing"));
            }
            let axis = match k.0.get("fit_axis").map(String::as_str).unwrap_or("n") {
                "n" => FitAxis::SampleSize,
                "T" => FitAxis::Horizon,
                other => return Err(config_error("fit_axis", format!("expected `n` or `T`, got `{other}`"))),
            };
            let config = RateExperimentConfig {
                model: k.model(Some(beta))?,
                beta,
                eval_point: k.real_or("eval_point", 0.0)?,
                n_grid,
                delta_rule,
                replicates: at_least("replicates", k.count("replicates")?, crate::rates::MIN_REPLICATES)?,
                master_seed: derive_seed(config.master_seed, 0, TAG_COMMAND),
                kernel_order: at_least("kernel_order", k.count_or("kernel_order", beta.ceil() as usize)?, 1)?,
                substeps: k.parse("substeps", "a positive integer")?,
            };
            Plan::Rates { config: Box::new(config), axis }
        }
        Command::LowerBound => {
            let ns: Vec<u64> = k.list("n_grid", "positive integers")?.ok_or_else(|| config_error("n_grid", "missing"))?;
            k.real("beta")?;
            k.real("alpha0")?;
            let pairs = ns.iter().map(|&n| pair_from(&k, n)).collect::<Result<Vec<_>>>()?;
            Plan::LowerBound { pairs }
        }
        Command::Malliavin => {
            let n = k.count("n")? as u64;
            let pair = pair_from(&k, n)?;
            let paths = at_least("paths", k.count("paths")?, crate::malliavin::MIN_PATHS)?;
            let score = if k.flag("score")? {
                let d_eps = k.real_or("d_eps", 0.05)?;
                Some((d_eps, k.real_or("x0", pair.eval_point)?, at_least("score_paths", k.count_or("score_paths", paths)?, 100)?))
            } else {
                None
            };
            Plan::Malliavin {
                epsilon: k.real_or("epsilon", 0.5)?,
                delta: positive("delta", k.real("delta")?)?,
                paths,
                regression_bandwidth: positive("regression_bandwidth", k.real_or("regression_bandwidth", pair.h_n / 4.0)?)?,
                score,
                pair: Box::new(pair),
            }
        }
        Command::LocalTime => {
            let eta = positive("eta", k.real_or("eta", 0.25)?)?;
            Plan::LocalTime {
                sigma: positive("sigma", k.real_or("sigma", (1.0 + eta).sqrt())?)?,
                eta,
                betas: k.reals_or("betas", &[0.0, 0.25, 1.0])?,
                replicates: at_least("replicates", k.count("replicates")?, 2)?,
                steps: at_least("steps", k.count_or("steps", 10_000)?, 100)?,
                band_factor: k.real_or("band_factor", 3.0)?,
            }
        }
    })
}

/// Contents of `manifest.txt`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
    pub artifacts: Vec<String>,
    /// Rows that could not be computed; the run exits nonzero when positive.
    pub row_errors: usize,
}

impl RunManifest {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn succeeded(&self) -> bool {
        self.row_errors == 0
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
        self.written.push(name.to_string());
        let mut out = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut out)?;
        out.flush()?;
        Ok(())
    }

    fn discard(&self) {
        for name in &self.written {
            let _ = fs::remove_file(self.dir.join(name));
        }
    }
}

/// Runs the command with the global thread pool.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    let plan = plan(config)?;
    fs::create_dir_all(&config.output_dir)?;
    for stale in [MANIFEST, FAILED_MARKER] {
        let path = config.output_dir.join(stale);
        if path.exists() {
            fs::remove_file(path)?;
        }
    }
    let started = Instant::now();
    let mut artifacts = Artifacts { dir: config.output_dir.clone(), written: Vec::new() };
    let mut manifest = RunManifest::default();
    manifest.push("command", config.command);
    manifest.push("seed", config.master_seed);
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    manifest.push("workers", rayon::current_num_threads());
    for (k, v) in &config.params {
        manifest.push(&format!("config.{k}"), v);
    }
    if let Err(e) = execute(&plan, config.master_seed, &mut artifacts, &mut manifest) {
        artifacts.discard();
        fs::write(config.output_dir.join(FAILED_MARKER), format!("command={}\nerror={e}\n", config.command))?;
        return Err(e);
    }
    manifest.artifacts = artifacts.written.clone();
    manifest.push("scope", config.command.scope());
    manifest.push("row_errors", manifest.row_errors);
    manifest.push("wall_clock_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    let mut text = String::new();
    for (k, v) in &manifest.entries {
        text.push_str(&format!("{k}={v}\n"));
    }
    text.push_str(&format!("artifacts={}\n", manifest.artifacts.join(",")));
    fs::write(config.output_dir.join(MANIFEST), text)?;
    Ok(manifest)
}

/// Runs the command inside a dedicated pool of `workers` threads.
pub fn run_with_workers(config: &RunConfig, workers: Option<usize>) -> Result<RunManifest> {
    match workers {
        None => run(config),
        Some(0) => Err(config_error("--workers", "must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| config_error("--workers", e.to_string()))?
            .install(|| run(config)),
    }
}

fn execute(plan: &Plan, seed: u64, out: &mut Artifacts, manifest: &mut RunManifest) -> Result<()> {
    match plan {
        Plan::Density { model, points } => {
            let density = build_stationary(model, 1e-12)?;
            let (lo, hi) = density.truncation_domain();
            out.write("density.csv", |w| {
                writeln!(w, "x,density,cdf")?;
                for i in 0..*points {
                    let x = lo + (hi - lo) * i as f64 / (*points - 1) as f64;
                    writeln!(w, "{},{},{}", real(x), real(density.density(x)), real(density.cdf(x)))?;
                }
                Ok(())
            })?;
            manifest.push("result.normalizer", real(density.normalizer()));
        }
        Plan::Estimate { model, n, delta, beta, kernel_order, eval_point, bandwidth } => {
            let density = Arc::new(build_stationary(model, 1e-12)?);
            let truth = density.density(*eval_point);
            let scheme = SamplingScheme::with_default_substeps(*n, *delta)?;
            let mut rng = RngStream::new(derive_seed(seed, 0, TAG_COMMAND));
            let samples = sample_discrete(model, &scheme, &InitialState::Stationary(density), &mut rng)?;
            let kernel = build_kernel(*kernel_order)?;
            let h = bandwidth.unwrap_or_else(|| bandwidth_rule(*n, *delta, *beta));
            let estimator = EstimatorConfig::new(*eval_point, h, kernel.clone())?;
            let estimate = estimate_density(&samples, &estimator);
            let regime = classify_regime(*n, *delta, *beta).label;
            out.write("samples.csv", |w| samples.write_csv(w))?;
            out.write("kernel.csv", |w| kernel.write_csv(w))?;
            out.write("estimate.csv", |w| {
                writeln!(w, "eval_point,bandwidth,regime,estimate,truth")?;
                writeln!(w, "{},{},{},{},{}", real(*eval_point), real(h), regime, real(estimate), real(truth))
            })?;
        }
        Plan::Rates { config, axis } => {
            let table = run_mse_experiment(config)?;
            manifest.row_errors += table.rows.iter().filter(|r| r.flagged).count();
            out.write("mse.csv", |w| table.write_csv(w))?;
            match fit_rate_exponent_against(&table, *axis) {
                Ok(fit) => {
                    out.write("fit.csv", |w| fit.write_csv(w))?;
                    manifest.push("result.slope", real(fit.slope));
                }
                Err(e) => manifest.push("result.fit", format!("unavailable: {e}")),
            }
            manifest.push("result.truth", real(table.truth));
        }
        Plan::LowerBound { pairs } => {
            let reports = pairs.iter().map(hellinger_report).collect::<Result<Vec<_>>>()?;
            out.write("hellinger.csv", |w| write_hellinger_csv(&reports, w))?;
        }
        Plan::Malliavin { pair, epsilon, delta, paths, regression_bandwidth, score } => {
            let row = conditional_second_moment(pair, *epsilon, *delta, *paths, *regression_bandwidth, derive_seed(seed, 0, TAG_COMMAND))?;
            out.write("conditional_moment.csv", |w| ConditionalMoment::write_csv(&[row], w))?;
            manifest.push("result.escaped_paths", row.escaped);
            if let Some((d_eps, x0, score_paths)) = score {
                let check = score_check(
                    &Perturbation::of(pair),
                    *epsilon,
                    *d_eps,
                    *delta,
                    *x0,
                    *score_paths,
                    derive_seed(seed, 1, TAG_COMMAND),
                )?;
                out.write("score.csv", |w| check.write_csv(w))?;
                manifest.push("result.score_overlap", real(check.overlap_fraction(1.96)));
                manifest.push("result.score_correlation", real(check.correlation()));
                manifest.push("result.score_escaped_paths", check.escaped);
            }
        }
        Plan::LocalTime { sigma, eta, betas, replicates, steps, band_factor } => {
            let rows = bound_sweep(
                &standard_geometries(),
                betas,
                *sigma,
                *eta,
                *replicates,
                *steps,
                *band_factor,
                derive_seed(seed, 0, TAG_COMMAND),
            )?;
            let (scaling, slope) =
                scaling_sweep(&[1.0, 0.25, 0.0625], *sigma, *replicates, *steps, *band_factor, derive_seed(seed, 1, TAG_COMMAND))?;
            out.write("bounds.csv", |w| write_bound_csv(&rows, w))?;
            out.write("scaling.csv", |w| write_scaling_csv(&scaling, w))?;
            manifest.push("result.c_eta", real(fitted_constant(&rows)));
            manifest.push("result.scaling_slope", real(slope));
        }
    }
    Ok(())
}
