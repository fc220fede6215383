//! Simulator for photon-counting phase estimation in a reconfigurable
//! multiport interferometer.
//!
//! The pipeline, bottom to top:
//!
//! - [`circuit`]: the fixed splitter sections, tunable phase bank, and
//!   noise model (visibility, calibration drift).
//! - [`fock`]: outcome distributions for one-photon and two-photon
//!   probes, including partial photon distinguishability.
//! - [`shift`]: exact derivative rules built from shifted evaluations.
//! - [`fisher`]: classical Fisher information (analytic and sampled)
//!   and the quantum bound it is compared against.
//! - [`optimize`]: budgeted Nelder-Mead used to pick measurement
//!   settings that minimize the total variance bound `Tr[F^-1]`.
//! - [`estimate`]: grid-based Bayesian multiphase estimation with
//!   windowed priors and circular statistics.
//! - [`experiment`]: the probe-setting registry and the canned studies
//!   (calibration drift, photon distinguishability, two-mode fringe
//!   reference).
//!
//! Everything randomized draws from per-stream RNGs derived in
//! [`sampling`], so runs are reproducible bit for bit, with or without
//! the `parallel` feature.

pub mod circuit;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod experiment;
pub mod fisher;
pub mod fock;
pub mod optimize;
pub mod sampling;
pub mod shift;

pub use error::{Error, Result};
