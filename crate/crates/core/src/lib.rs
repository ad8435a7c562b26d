//! Simulation and estimation toolkit for ultrasmall optical time delays
//! measured with joint weak measurements of delay and alignment.
//!
//! The crate is organised around the measurement chain:
//!
//! - [`spectrum`] — the incoming frequency distribution p₀(ω);
//! - [`interferometer`] — outcome probabilities and a photon generator;
//! - [`estimation`] — maximum likelihood and closed-form estimators;
//! - [`information`] — Fisher information, Cramér–Rao bounds, precision curves;
//! - [`experiments`] — seeded Monte Carlo campaigns;
//! - [`cli`] — the `joint-weak` command-line front end.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod information;
pub mod interferometer;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};
