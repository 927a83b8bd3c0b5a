//! Cell-free XL-MIMO uplink simulator with a multi-agent actor-critic
//! power-control laboratory.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: planar array geometry, wavenumber-domain small-scale fading
//!   and per-antenna large-scale fading.
//! - [`se`]: uplink signal model, Monte-Carlo and closed-form MR spectral
//!   efficiency, Gaussian moment oracles.
//! - [`env`]: the mobile multi-agent environment (placement, mobility,
//!   predictive step management, rewards).
//! - [`marl`]: from-scratch MLPs, prioritized replay and the MADDPG family.
//! - [`dlpc`]: double-layer (per-UE / per-antenna) power control.
//! - [`harness`]: configuration, baselines, convergence detection, experiments.

pub mod channel;
pub mod dlpc;
pub mod env;
mod error;
pub mod harness;
pub mod linalg;
pub mod marl;
pub mod rng;
pub mod se;

pub use error::{Error, Result};
