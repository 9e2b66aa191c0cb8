//! MCMC posterior simulation for Bayesian mixture models.
//!
//! Mixture components are [`hierarchy::Hierarchy`] objects that bind a
//! [`likelihood::Likelihood`], a [`prior::PriorModel`] and an
//! [`updater::Updater`]. Weights come from a [`mixing::Mixing`]. The
//! samplers in [`algorithm`] (Neal's algorithms 2, 3 and 8 and the blocked
//! Gibbs sampler) write [`io::AlgorithmState`] snapshots to a
//! [`io::Collector`], which [`postprocess`] turns into density estimates,
//! clusterings and diagnostics.

pub mod algorithm;
pub mod config;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod likelihood;
pub mod mixing;
pub mod numeric;
pub mod postprocess;
pub mod prior;
pub mod state;
pub mod updater;

pub use crate::error::{Error, Result};

/// Scalar used by the samplers and the chain format.
pub type Scalar = f64;
pub type Vector = nalgebra::DVector<Scalar>;
pub type Matrix = nalgebra::DMatrix<Scalar>;

/// Random number generator driving every chain.
pub type McmcRng = rand_chacha::ChaCha8Rng;
