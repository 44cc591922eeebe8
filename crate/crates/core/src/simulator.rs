//! Euler-Maruyama simulation of paths and of uniformly sampled observations.

use std::io::{self, Write};
use std::sync::Arc;

use crate::diffusion::{DiffusionModel, StationaryDensity};
use crate::error::{Error, Result};
use crate::output::real;
use crate::rng::RngStream;

/// Paths leaving `[-BLOWUP, BLOWUP]` abort the simulation.
pub const BLOWUP: f64 = 1e6;

/// Observation grid `t_i = i * delta`, `i = 0..=n`, with `substeps` Euler steps per interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingScheme {
    n: usize,
    delta: f64,
    substeps: usize,
}

impl SamplingScheme {
    pub fn new(n: usize, delta: f64, substeps: usize) -> Result<Self> {
        if n == 0 || substeps == 0 || !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!(
                "scheme needs n >= 1, substeps >= 1 and delta > 0 (got n={n}, delta={delta}, substeps={substeps})"
            )));
        }
        Ok(Self { n, delta, substeps })
    }

    /// Uses the smallest substep count with fine step at most `min(delta/10, 1e-3)`.
    pub fn with_default_substeps(n: usize, delta: f64) -> Result<Self> {
        Self::new(n, delta, default_substeps(delta))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// `T = n * delta`.
    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.delta
    }

    pub fn fine_step(&self) -> f64 {
        self.delta / self.substeps as f64
    }
}

/// Substeps giving a fine step of at most `min(delta/10, 1e-3)`.
pub fn default_substeps(delta: f64) -> usize {
    let target = (delta / 10.0).min(1e-3);
    ((delta / target) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Time grid and values of a simulated trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last time of the grid.
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Initial law of a sampled trajectory.
#[derive(Clone, Debug)]
pub enum InitialState {
    Stationary(Arc<StationaryDensity>),
    Fixed(f64),
}

impl InitialState {
    fn draw(&self, rng: &mut RngStream) -> f64 {
        match self {
            InitialState::Stationary(d) => d.sample(rng),
            InitialState::Fixed(x) => *x,
        }
    }
}

/// Observations `X_{t_0}, ..., X_{t_n}` of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    observations: Vec<f64>,
    delta: f64,
    substeps: usize,
    model_tag: String,
    seed: u64,
}

impl SampleSet {
    /// Wraps externally produced observations on a uniform grid of step `delta`.
    pub fn from_observations(observations: Vec<f64>, delta: f64, model_tag: &str, seed: u64) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::Precondition("a sample set needs at least two observations".into()));
        }
        Ok(Self { observations, delta, substeps: 1, model_tag: model_tag.to_string(), seed })
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn scheme(&self) -> SamplingScheme {
        SamplingScheme { n: self.observations.len() - 1, delta: self.delta, substeps: self.substeps }
    }

    pub fn n(&self) -> usize {
        self.observations.len() - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes `time,value` rows after a comment line describing the sample.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "# model={} n={} delta={} seed={}",
            self.model_tag,
            self.n(),
            real(self.delta),
            self.seed
        )?;
        writeln!(out, "time,value")?;
        for (i, x) in self.observations.iter().enumerate() {
            writeln!(out, "{},{}", real(i as f64 * self.delta), real(*x))?;
        }
        Ok(())
    }
}

/// Euler-Maruyama path on `[0, horizon]` with step `dt`; the last step is shortened to land on
/// `horizon` exactly.
pub fn simulate_path(model: &DiffusionModel, x0: f64, horizon: f64, dt: f64, rng: &mut RngStream) -> Result<Path> {
    if !(horizon > 0.0 && dt > 0.0 && dt <= horizon) {
        return Err(Error::Precondition(format!("need 0 < dt <= horizon (dt={dt}, horizon={horizon})")));
    }
    let full = (horizon / dt * (1.0 - 1e-12)).floor() as usize;
    let steps = if (full as f64) * dt < horizon * (1.0 - 1e-12) { full + 1 } else { full };
    let (drift, diffusion) = (model.drift(), model.diffusion());
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = x0;
    times.push(0.0);
    values.push(x);
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == steps { horizon } else { (k + 1) as f64 * dt };
        let h = t1 - t0;
        x += drift.value(x) * h + diffusion.value(x) * h.sqrt() * rng.normal();
        if !(x.abs() <= BLOWUP) {
            return Err(Error::NumericalBlowup { time: t1, value: x.abs() });
        }
        times.push(t1);
        values.push(x);
    }
    Ok(Path { times, values })
}

/// Simulates one trajectory and keeps its values on the observation grid.
pub fn sample_discrete(
    model: &DiffusionModel,
    scheme: &SamplingScheme,
    init: &InitialState,
    rng: &mut RngStream,
) -> Result<SampleSet> {
    let (drift, diffusion) = (model.drift(), model.diffusion());
    let dt = scheme.fine_step();
    let sq = dt.sqrt();
    let mut x = init.draw(rng);
    let mut observations = Vec::with_capacity(scheme.n + 1);
    observations.push(x);
    for i in 0..scheme.n {
        for _ in 0..scheme.substeps {
            x += drift.value(x) * dt + diffusion.value(x) * sq * rng.normal();
        }
        if !(x.abs() <= BLOWUP) {
            return Err(Error::NumericalBlowup { time: (i + 1) as f64 * scheme.delta, value: x.abs() });
        }
        observations.push(x);
    }
    Ok(SampleSet {
        observations,
        delta: scheme.delta,
        substeps: scheme.substeps,
        model_tag: model.tag(),
        seed: rng.seed(),
    })
}
