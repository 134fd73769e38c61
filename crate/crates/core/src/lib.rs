//! Correlation-spectra testing of PUF populations.
//!
//! PUF instances are treated as random Boolean functions. Pairwise correlation
//! coefficients across a population form a spectrum, and a faulty population
//! shows up as a shifted spectrum even when per-bit uniformity looks healthy.
//!
//! - [`boolean`]: bit vectors, correlation, and exact lattice combinatorics.
//! - [`sim`]: behavioral 5-4 Double Arbiter PUF with stuck-at faults.
//! - [`spectra`]: histograms of pairwise coefficients.
//! - [`stats`]: Welch's t, KL divergence, uniformity and the pass/fail verdict.
//! - [`crp`], [`config`], [`plot`]: dump format, run configuration and SVG output.
//! - [`cli`]: the `puf-spectra` command line front end.

pub mod boolean;
pub mod cli;
pub mod config;
pub mod crp;
pub mod error;
pub mod plot;
pub mod sim;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
