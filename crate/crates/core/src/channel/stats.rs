use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::ArrayGeometry;
use super::lattice::{
    lattice_for, variance_profile, wave_vector_matrix, KzConvention, SpectralModel, WavenumberLattice,
};
use super::lsf::{fresnel_beta, lsf_matrix};
use crate::linalg::{complex_normal_matrix, hermitian_part, CMat, RMat};
use crate::{Error, Result};

/// Which large-scale fading mask multiplies the small-scale fading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsfMode {
    /// Exact per-antenna-pair amplitudes.
    #[default]
    PerAntenna,
    /// One scalar per BS-UE pair.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub wavelength: f64,
    pub kz: KzConvention,
    pub spectrum_r: SpectralModel,
    pub spectrum_s: SpectralModel,
    pub lsf_mode: LsfMode,
}

impl ChannelParams {
    pub fn new(wavelength: f64) -> Self {
        ChannelParams {
            wavelength,
            kz: KzConvention::default(),
            spectrum_r: SpectralModel::default(),
            spectrum_s: SpectralModel::default(),
            lsf_mode: LsfMode::default(),
        }
    }
}

/// `(conj(U_s) ⊗ U_r) diag(v_s² ⊗ v_r²) (conj(U_s) ⊗ U_r)^H`, symmetrized.
///
/// This is the covariance of `vec(H)` (column-major) for `H` drawn by
/// [`sample_ssf`].
pub fn correlation_matrix(u_r: &CMat, u_s: &CMat, v_r: &[f64], v_s: &[f64]) -> Result<CMat> {
    if u_r.ncols() != v_r.len() || u_s.ncols() != v_s.len() {
        return Err(Error::Dimension(format!(
            "U_r has {} columns for {} receive variances, U_s has {} columns for {} transmit variances",
            u_r.ncols(),
            v_r.len(),
            u_s.ncols(),
            v_s.len()
        )));
    }
    let a = u_s.conjugate().kronecker(u_r);
    let mut scaled = a;
    for (j, vs) in v_s.iter().enumerate() {
        for (i, vr) in v_r.iter().enumerate() {
            let w = Complex64::new(vs * vr, 0.0);
            scaled.column_mut(j * v_r.len() + i).scale_mut(w.re);
        }
    }
    Ok(hermitian_part(&(&scaled * scaled.adjoint())))
}

/// Lattice-dependent second-order statistics of one BS/UE surface pair.
///
/// The correlation matrix does not change when either surface is translated,
/// so it can be computed once per pair of surface shapes and shared.
#[derive(Debug, Clone)]
pub struct SpatialModel {
    pub lattice_r: WavenumberLattice,
    pub lattice_s: WavenumberLattice,
    pub v_r: Vec<f64>,
    pub v_s: Vec<f64>,
    pub corr: Arc<CMat>,
    pub params: ChannelParams,
}

impl SpatialModel {
    pub fn new(geom_r: &ArrayGeometry, geom_s: &ArrayGeometry, params: &ChannelParams) -> Result<Self> {
        let lattice_r = lattice_for(geom_r, params.wavelength)?;
        let lattice_s = lattice_for(geom_s, params.wavelength)?;
        let v_r = variance_profile(&lattice_r, &params.spectrum_r, geom_r.n_antennas())?;
        let v_s = variance_profile(&lattice_s, &params.spectrum_s, geom_s.n_antennas())?;
        let u_r = wave_vector_matrix(&lattice_r, geom_r, params.kz)?;
        let u_s = wave_vector_matrix(&lattice_s, geom_s, params.kz)?;
        let corr = Arc::new(correlation_matrix(&u_r, &u_s, &v_r, &v_s)?);
        Ok(SpatialModel {
            lattice_r,
            lattice_s,
            v_r,
            v_s,
            corr,
            params: params.clone(),
        })
    }

    /// Full statistics for surfaces of the same shape placed at `geom_r`, `geom_s`.
    pub fn stats(&self, geom_r: &ArrayGeometry, geom_s: &ArrayGeometry) -> Result<ChannelStats> {
        let p = &self.params;
        let u_r = wave_vector_matrix(&self.lattice_r, geom_r, p.kz)?;
        let u_s = wave_vector_matrix(&self.lattice_s, geom_s, p.kz)?;
        let lsf = lsf_matrix(geom_r, geom_s, p.wavelength)?;
        let beta = match fresnel_beta(geom_r, geom_s, p.wavelength) {
            Ok(b) => b,
            Err(Error::FresnelInvalid { .. }) => lsf.mean(),
            Err(e) => return Err(e),
        };
        Ok(ChannelStats {
            u_r,
            u_s,
            v_r: self.v_r.clone(),
            v_s: self.v_s.clone(),
            corr: Arc::clone(&self.corr),
            lsf,
            beta,
            lsf_mode: p.lsf_mode,
        })
    }
}

/// Second-order statistics of the channel between BS `m` and UE `k`.
#[derive(Debug, Clone)]
pub struct ChannelStats {
    pub u_r: CMat,
    pub u_s: CMat,
    pub v_r: Vec<f64>,
    pub v_s: Vec<f64>,
    pub corr: Arc<CMat>,
    pub lsf: RMat,
    /// Fresnel amplitude, or the mean exact amplitude when the pair is too
    /// close for the far-field form.
    pub beta: f64,
    pub lsf_mode: LsfMode,
}

impl ChannelStats {
    pub fn build(geom_r: &ArrayGeometry, geom_s: &ArrayGeometry, params: &ChannelParams) -> Result<Self> {
        SpatialModel::new(geom_r, geom_s, params)?.stats(geom_r, geom_s)
    }

    pub fn n_r(&self) -> usize {
        self.u_r.nrows()
    }

    pub fn n_s(&self) -> usize {
        self.u_s.nrows()
    }

    /// Mask applied elementwise to the small-scale fading.
    pub fn mask(&self) -> RMat {
        match self.lsf_mode {
            LsfMode::PerAntenna => self.lsf.clone(),
            LsfMode::Scalar => RMat::from_element(self.n_r(), self.n_s(), self.beta),
        }
    }

    /// Covariance of `vec(G)` for `G = mask ⊙ H`, column-major.
    pub fn effective_covariance(&self) -> CMat {
        let mask = self.mask();
        let d = DVector::from_iterator(mask.len(), mask.iter().copied());
        let mut c = (*self.corr).clone();
        for j in 0..c.ncols() {
            for i in 0..c.nrows() {
                c[(i, j)] *= d[i] * d[j];
            }
        }
        c
    }

    /// Mask-weighted sum of all per-antenna amplitudes on the UE antenna `ns`.
    pub fn antenna_gain(&self, ns: usize) -> f64 {
        self.mask().column(ns).sum()
    }

    pub fn with_lsf_mode(mut self, mode: LsfMode) -> Self {
        self.lsf_mode = mode;
        self
    }
}

/// One small-scale fading realisation `U_r (Q ⊙ W) U_s^H`.
pub fn sample_ssf<R: Rng + ?Sized>(stats: &ChannelStats, rng: &mut R) -> CMat {
    let nr = stats.v_r.len();
    let ns = stats.v_s.len();
    let mut w = complex_normal_matrix(rng, nr, ns);
    for j in 0..ns {
        for i in 0..nr {
            w[(i, j)] *= stats.v_r[i] * stats.v_s[j];
        }
    }
    &stats.u_r * w * stats.u_s.adjoint()
}

/// `G = B ⊙ H`.
pub fn channel_matrix(lsf: &RMat, ssf: &CMat) -> Result<CMat> {
    if lsf.shape() != ssf.shape() {
        return Err(Error::Dimension(format!(
            "LSF is {:?} but SSF is {:?}",
            lsf.shape(),
            ssf.shape()
        )));
    }
    Ok(CMat::from_fn(ssf.nrows(), ssf.ncols(), |i, j| {
        ssf[(i, j)] * lsf[(i, j)]
    }))
}

/// Draw a full channel realisation `mask ⊙ H`.
pub fn sample_channel<R: Rng + ?Sized>(stats: &ChannelStats, rng: &mut R) -> CMat {
    let h = sample_ssf(stats, rng);
    let mask = stats.mask();
    CMat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * mask[(i, j)])
}
