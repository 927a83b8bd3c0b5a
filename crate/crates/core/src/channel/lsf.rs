use std::f64::consts::PI;

use super::geometry::{distance, ArrayGeometry, Point3};
use crate::linalg::RMat;
use crate::{Error, Result};

/// Normalised power pattern `G_t F(θ) = 2 cos θ`, with `θ` measured from the
/// surface normal. Integrates to one against `sin θ` over `[0, π/2]`.
pub fn radiation_gain(cos_theta: f64) -> f64 {
    2.0 * cos_theta.clamp(0.0, 1.0)
}

fn pair_amplitude(a: &Point3, b: &Point3, wavelength: f64) -> Result<f64> {
    let d = distance(a, b);
    if d <= 0.0 {
        return Err(Error::Geometry(format!("coincident antennas at {a:?}")));
    }
    let cos_theta = (a[2] - b[2]).abs() / d;
    let gain = radiation_gain(cos_theta);
    if gain <= 0.0 {
        return Err(Error::Geometry(format!(
            "antennas at {a:?} and {b:?} are coplanar, zero pattern gain"
        )));
    }
    Ok(gain.sqrt() * wavelength / (4.0 * PI * d))
}

/// Exact per-antenna-pair large-scale fading amplitudes, `N_r x N_s`.
pub fn lsf_matrix(geom_r: &ArrayGeometry, geom_s: &ArrayGeometry, wavelength: f64) -> Result<RMat> {
    let mut b = RMat::zeros(geom_r.n_antennas(), geom_s.n_antennas());
    for (i, pr) in geom_r.positions.iter().enumerate() {
        for (j, ps) in geom_s.positions.iter().enumerate() {
            b[(i, j)] = pair_amplitude(pr, ps, wavelength)?;
        }
    }
    Ok(b)
}

/// Scalar far-field amplitude between surface centres. Only valid when the
/// centre distance exceeds the larger of the two apertures.
pub fn fresnel_beta(geom_r: &ArrayGeometry, geom_s: &ArrayGeometry, wavelength: f64) -> Result<f64> {
    let d = distance(&geom_r.origin, &geom_s.origin);
    let aperture = geom_r.aperture().max(geom_s.aperture());
    if d <= aperture {
        return Err(Error::FresnelInvalid { distance: d, aperture });
    }
    pair_amplitude(&geom_r.origin, &geom_s.origin, wavelength)
}
