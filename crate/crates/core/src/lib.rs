//! Simulation and verification toolkit for coupled stochastic oscillators
//! driven by additive white noise.
//!
//! The crate provides:
//!
//! - exact Gaussian transition kernels and path sampling for the linear
//!   coupled harmonic oscillator ([`sampler`]);
//! - the locally linearized one-step integrator, its discrete variance
//!   analytics and stepsize threshold, and an Euler-Maruyama baseline
//!   ([`integrators`]);
//! - nonlinear oscillator models, including the spring-coupled pendulum pair
//!   ([`models`]);
//! - sign-change, iterated-logarithm-envelope and simple-zero statistics over
//!   trajectories ([`analysis`]);
//! - a reproducible experiment harness behind the `stochosc` CLI
//!   ([`config`], [`experiment`]).
//!
//! Everything is deterministic given a (root seed, stream id) pair; see
//! [`rng`].

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiment;
pub mod integrators;
pub mod linalg;
pub mod models;
pub mod presets;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod trajectory;

pub use error::{CoreError, Result};
