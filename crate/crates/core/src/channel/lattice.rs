use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::ArrayGeometry;
use crate::linalg::CMat;
use crate::{Error, Result};

const ELLIPSE_SLACK: f64 = 1e-12;

/// Integer wavenumber samples inside the lattice ellipse of a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavenumberLattice {
    pub points: Vec<(i64, i64)>,
    pub len_x: f64,
    pub len_y: f64,
    pub wavelength: f64,
}

impl WavenumberLattice {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, lx: i64, ly: i64) -> bool {
        in_ellipse(lx, ly, self.len_x, self.len_y, self.wavelength)
    }
}

fn in_ellipse(lx: i64, ly: i64, len_x: f64, len_y: f64, wavelength: f64) -> bool {
    let a = lx as f64 * wavelength / len_x;
    let b = ly as f64 * wavelength / len_y;
    a * a + b * b <= 1.0 + ELLIPSE_SLACK
}

/// All integer pairs `(lx, ly)` with `(lx*λ/Lx)^2 + (ly*λ/Ly)^2 <= 1`,
/// sorted lexicographically.
pub fn wavenumber_lattice(len_x: f64, len_y: f64, wavelength: f64) -> Result<WavenumberLattice> {
    for (name, v) in [("len_x", len_x), ("len_y", len_y), ("wavelength", wavelength)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    let bx = (len_x / wavelength).floor() as i64 + 1;
    let by = (len_y / wavelength).floor() as i64 + 1;
    let mut points = Vec::new();
    for lx in -bx..=bx {
        for ly in -by..=by {
            if in_ellipse(lx, ly, len_x, len_y, wavelength) {
                points.push((lx, ly));
            }
        }
    }
    Ok(WavenumberLattice {
        points,
        len_x,
        len_y,
        wavelength,
    })
}

/// Lattice matching the physical extent of `geom`.
pub fn lattice_for(geom: &ArrayGeometry, wavelength: f64) -> Result<WavenumberLattice> {
    wavenumber_lattice(geom.len_x(), geom.len_y(), wavelength)
}

/// How the axial wavenumber of a lattice point is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KzConvention {
    /// `sqrt(k^2 - (2π lx/Lx)^2 - (2π ly/Ly)^2)`.
    #[default]
    Consistent,
    /// `sqrt(k^2 - lx^2 - ly^2)` with the raw integer indices.
    Raw,
}

fn axial_wavenumber(lx: i64, ly: i64, len_x: f64, len_y: f64, wavelength: f64, kz: KzConvention) -> Result<f64> {
    let k = 2.0 * PI / wavelength;
    let (kx, ky) = match kz {
        KzConvention::Consistent => (2.0 * PI * lx as f64 / len_x, 2.0 * PI * ly as f64 / len_y),
        KzConvention::Raw => (lx as f64, ly as f64),
    };
    let kz2 = k * k - kx * kx - ky * ky;
    if kz2 < 0.0 {
        // rounding at the ellipse boundary can leave a tiny negative value
        if kz2 > -1e-9 * k * k {
            return Ok(0.0);
        }
        return Err(Error::Numerical(format!(
            "lattice point ({lx}, {ly}) gives an evanescent wave (kz^2 = {kz2})"
        )));
    }
    Ok(kz2.sqrt())
}

/// `N x n` matrix of plane-wave phasors, `(1/N) exp(-i k_j · r_a)`, evaluated
/// at the absolute antenna positions of `geom`.
pub fn wave_vector_matrix(lattice: &WavenumberLattice, geom: &ArrayGeometry, kz: KzConvention) -> Result<CMat> {
    let n = geom.n_antennas();
    let tol = 1e-9 * geom.len_x().max(geom.len_y());
    if (lattice.len_x - geom.len_x()).abs() > tol || (lattice.len_y - geom.len_y()).abs() > tol {
        return Err(Error::Dimension(format!(
            "lattice built for {}x{} m but surface is {}x{} m",
            lattice.len_x,
            lattice.len_y,
            geom.len_x(),
            geom.len_y()
        )));
    }
    let scale = 1.0 / n as f64;
    let mut u = CMat::zeros(n, lattice.len());
    for (j, &(lx, ly)) in lattice.points.iter().enumerate() {
        let kx = 2.0 * PI * lx as f64 / lattice.len_x;
        let ky = 2.0 * PI * ly as f64 / lattice.len_y;
        let kzv = axial_wavenumber(lx, ly, lattice.len_x, lattice.len_y, lattice.wavelength, kz)?;
        for (a, p) in geom.positions.iter().enumerate() {
            let phase = -(kx * p[0] + ky * p[1] + kzv * p[2]);
            u[(a, j)] = Complex64::from_polar(scale, phase);
        }
    }
    Ok(u)
}

/// Power distribution over the wavenumber lattice.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralModel {
    /// Equal power on every lattice point.
    #[default]
    Isotropic,
    /// Unnormalised nonnegative weights, one per lattice point.
    Custom(Vec<f64>),
}

impl FromStr for SpectralModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotropic" => Ok(SpectralModel::Isotropic),
            other => Err(Error::InvalidArgument(format!("unknown spectral model `{other}`"))),
        }
    }
}

/// Per-point standard deviations scaled by `sqrt(n_antennas)`, with the
/// underlying variances summing to one.
pub fn variance_profile(lattice: &WavenumberLattice, model: &SpectralModel, n_antennas: usize) -> Result<Vec<f64>> {
    if lattice.is_empty() {
        return Err(Error::InvalidArgument("empty wavenumber lattice".into()));
    }
    let weights: Vec<f64> = match model {
        SpectralModel::Isotropic => vec![1.0; lattice.len()],
        SpectralModel::Custom(w) => {
            if w.len() != lattice.len() {
                return Err(Error::Dimension(format!(
                    "custom spectrum has {} weights for {} lattice points",
                    w.len(),
                    lattice.len()
                )));
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "spectral weights must be finite and nonnegative".into(),
                ));
            }
            w.clone()
        }
    };
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("spectral weights sum to zero".into()));
    }
    let root_n = (n_antennas as f64).sqrt();
    Ok(weights.iter().map(|w| root_n * (w / total).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::geometry::build_surface;

    fn brute_count(len: f64, lambda: f64) -> usize {
        let mut c = 0;
        for a in -4i64..=4 {
            for b in -4i64..=4 {
                let x = a as f64 * lambda / len;
                let y = b as f64 * lambda / len;
                if x * x + y * y <= 1.0 + 1e-12 {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn lattice_counts() {
        let lambda = 0.01;
        let half = wavenumber_lattice(lambda / 2.0, lambda / 2.0, lambda).unwrap();
        assert_eq!(half.points, vec![(0, 0)]);
        let one = wavenumber_lattice(lambda, lambda, lambda).unwrap();
        assert_eq!(one.points, vec![(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]);
        let two = wavenumber_lattice(2.0 * lambda, 2.0 * lambda, lambda).unwrap();
        assert_eq!(two.len(), 13);
        for len in [0.5, 1.0, 2.0] {
            assert_eq!(
                wavenumber_lattice(len * lambda, len * lambda, lambda).unwrap().len(),
                brute_count(len * lambda, lambda)
            );
        }
    }

    #[test]
    fn quarter_wavelength_phase() {
        let lambda = 0.01;
        let lat = WavenumberLattice {
            points: vec![(1, 0)],
            len_x: lambda,
            len_y: lambda,
            wavelength: lambda,
        };
        let mut g = build_surface(1, 1, lambda, [0.0; 3]).unwrap();
        g.positions[0] = [lambda / 4.0, 0.0, 0.0];
        let u = wave_vector_matrix(&lat, &g, KzConvention::Consistent).unwrap();
        assert!((u[(0, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn origin_antenna_has_zero_phase() {
        let lambda = 0.01;
        let g = build_surface(1, 1, lambda, [0.0; 3]).unwrap();
        let lat = lattice_for(&g, lambda).unwrap();
        let u = wave_vector_matrix(&lat, &g, KzConvention::Consistent).unwrap();
        for z in u.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn raw_convention_differs_off_centre() {
        let lambda = 0.01;
        let g = build_surface(4, 4, lambda / 3.0, [0.0, 0.0, 1.5]).unwrap();
        let lat = lattice_for(&g, lambda).unwrap();
        assert!(lat.len() > 1);
        let a = wave_vector_matrix(&lat, &g, KzConvention::Consistent).unwrap();
        let b = wave_vector_matrix(&lat, &g, KzConvention::Raw).unwrap();
        assert!((a - b).iter().any(|z| z.norm() > 1e-6));
    }

    #[test]
    fn mismatched_lattice_is_rejected() {
        let lambda = 0.01;
        let g = build_surface(2, 2, lambda / 3.0, [0.0; 3]).unwrap();
        let lat = wavenumber_lattice(lambda, lambda, lambda).unwrap();
        assert!(wave_vector_matrix(&lat, &g, KzConvention::Consistent).is_err());
    }

    #[test]
    fn profiles() {
        let lambda = 1.0;
        let single = wavenumber_lattice(0.5, 0.5, lambda).unwrap();
        assert_eq!(
            variance_profile(&single, &SpectralModel::Isotropic, 4).unwrap(),
            vec![2.0]
        );
        let five = wavenumber_lattice(1.0, 1.0, lambda).unwrap();
        for v in variance_profile(&five, &SpectralModel::Isotropic, 1).unwrap() {
            assert!((v - 0.2f64.sqrt()).abs() < 1e-15);
        }
        let two = WavenumberLattice {
            points: vec![(0, 0), (1, 0)],
            len_x: 1.0,
            len_y: 1.0,
            wavelength: 1.0,
        };
        let v = variance_profile(&two, &SpectralModel::Custom(vec![4.0, 1.0]), 1).unwrap();
        assert!((v[0] - 0.8f64.sqrt()).abs() < 1e-15 && (v[1] - 0.2f64.sqrt()).abs() < 1e-15);
        assert!("gaussian".parse::<SpectralModel>().is_err());
        assert_eq!("isotropic".parse::<SpectralModel>().unwrap(), SpectralModel::Isotropic);
    }
}
