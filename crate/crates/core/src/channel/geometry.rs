use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point3 = [f64; 3];

/// A planar XL-surface parallel to the x-y plane.
///
/// Antennas are indexed row by row: index `row * n_h + col`, rows running
/// along +y and columns along +x. The surface is centred on `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_h: usize,
    pub n_v: usize,
    pub spacing: f64,
    pub origin: Point3,
    pub positions: Vec<Point3>,
}

impl ArrayGeometry {
    pub fn n_antennas(&self) -> usize {
        self.n_h * self.n_v
    }

    /// Horizontal length `L_x = n_h * spacing` (edge spacing of half a pitch on both ends).
    pub fn len_x(&self) -> f64 {
        self.n_h as f64 * self.spacing
    }

    pub fn len_y(&self) -> f64 {
        self.n_v as f64 * self.spacing
    }

    /// Largest side of the surface, used as the aperture `D` in far-field checks.
    pub fn aperture(&self) -> f64 {
        self.len_x().max(self.len_y())
    }

    /// The same surface moved so that it is centred on `origin`.
    pub fn centered_at(&self, origin: Point3) -> ArrayGeometry {
        let shift = [
            origin[0] - self.origin[0],
            origin[1] - self.origin[1],
            origin[2] - self.origin[2],
        ];
        ArrayGeometry {
            n_h: self.n_h,
            n_v: self.n_v,
            spacing: self.spacing,
            origin,
            positions: self
                .positions
                .iter()
                .map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]])
                .collect(),
        }
    }

    /// True when the pitch respects the half-wavelength assumption.
    pub fn is_sub_half_wavelength(&self, wavelength: f64) -> bool {
        self.spacing < wavelength / 2.0
    }
}

/// Lay out an `n_h x n_v` grid with pitch `spacing`, centred on `origin`.
pub fn build_surface(n_h: usize, n_v: usize, spacing: f64, origin: Point3) -> Result<ArrayGeometry> {
    if n_h == 0 || n_v == 0 {
        return Err(Error::InvalidArgument(format!(
            "surface needs at least one antenna per row and column, got {n_h}x{n_v}"
        )));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "antenna spacing must be positive, got {spacing}"
        )));
    }
    let cx = (n_h as f64 - 1.0) / 2.0;
    let cy = (n_v as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(n_h * n_v);
    for row in 0..n_v {
        for col in 0..n_h {
            positions.push([
                origin[0] + (col as f64 - cx) * spacing,
                origin[1] + (row as f64 - cy) * spacing,
                origin[2],
            ]);
        }
    }
    Ok(ArrayGeometry {
        n_h,
        n_v,
        spacing,
        origin,
        positions,
    })
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
