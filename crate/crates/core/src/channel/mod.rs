//! Near-field channel model: planar surfaces, wavenumber-domain small-scale
//! fading with its exact correlation matrix, and per-antenna large-scale
//! fading.

mod geometry;
mod lattice;
mod lsf;
mod stats;

pub use geometry::{build_surface, distance, ArrayGeometry, Point3};
pub use lattice::{
    lattice_for, variance_profile, wave_vector_matrix, wavenumber_lattice, KzConvention, SpectralModel,
    WavenumberLattice,
};
pub use lsf::{fresnel_beta, lsf_matrix, radiation_gain};
pub use stats::{
    channel_matrix, correlation_matrix, sample_channel, sample_ssf, ChannelParams, ChannelStats, LsfMode, SpatialModel,
};
