//! Kernel estimation of the invariant density of a discretely observed one-dimensional ergodic
//! diffusion, together with Monte Carlo laboratories for its convergence rates, the
//! two-hypotheses lower bound, Malliavin score weights and Brownian-bridge local times.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diffusion;
pub mod error;
pub mod kernel;
pub mod local_time;
pub mod lower_bound;
pub mod malliavin;
pub mod output;
pub mod profiles;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
