//! Riesz `s`-energy of point configurations on self-similar fractals.
//!
//! - [`fractal`]: similitudes, the Moran dimension, symbolic cells.
//! - [`energy`]: ordered-pair Riesz energies and separation statistics.
//! - [`minimizer`]: exhaustive, local-search and lift-seeded minimizers,
//!   plus best packing.
//! - [`asymptotics`]: geometric-subsequence limits, the θ-curve, gap
//!   certificates, cell-measure convergence and exponent fits.
//! - [`experiment`] and [`plot`]: JSON-configured runs writing CSV reports.

pub mod asymptotics;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod fractal;
pub mod minimizer;
pub mod plot;
pub mod rng;

pub use energy::{Configuration, EnergyRecord};
pub use error::{Error, Result};
pub use fractal::{CellAddress, Fractal, PointAddress, Similitude};
pub use minimizer::{MinimizeResult, SearchOptions, Strategy};
