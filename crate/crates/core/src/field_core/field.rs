use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{CylinderGrid, Geometry, PlanarGrid};
use crate::error::{Error, Result};

/// How the additive constant of a field sample was fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pinning {
    ZeroBoundary,
    CircleMeanZero,
    SphericalMeanZero,
    /// Pinned against a user-supplied background density.
    CustomMeanZero,
    ModuloConstant,
}

impl Pinning {
    pub fn code(self) -> u32 {
        match self {
            Pinning::ZeroBoundary => 0,
            Pinning::CircleMeanZero => 1,
            Pinning::SphericalMeanZero => 2,
            Pinning::CustomMeanZero => 3,
            Pinning::ModuloConstant => 4,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            0 => Pinning::ZeroBoundary,
            1 => Pinning::CircleMeanZero,
            2 => Pinning::SphericalMeanZero,
            3 => Pinning::CustomMeanZero,
            4 => Pinning::ModuloConstant,
            c => return Err(Error::Format(format!("unknown pinning code {c}"))),
        })
    }
}

/// Real field sample on a grid.
///
/// The value at cell `k` is `values[k] + constant`. Keeping the zero mode in a
/// separate scalar lets constant shifts act on measures without touching the
/// per-cell values, so normalized measures are bit-identical under shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    geometry: Geometry,
    values: Vec<f64>,
    constant: f64,
    pinning: Pinning,
}

impl Field {
    pub fn new(geometry: Geometry, values: Vec<f64>, pinning: Pinning) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::Geometry(format!(
                "{} values for a grid of {} cells",
                values.len(),
                geometry.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite field value at cell {k}")));
        }
        Ok(Field { geometry, values, constant: 0.0, pinning })
    }

    pub fn constant_field(geometry: Geometry, c: f64) -> Self {
        let n = geometry.len();
        Field { geometry, values: vec![0.0; n], constant: c, pinning: Pinning::ModuloConstant }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Per-cell values without the zero mode.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn pinning(&self) -> Pinning {
        self.pinning
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k] + self.constant
    }

    /// The same field plus the constant `c`.
    pub fn shifted(&self, c: f64) -> Field {
        Field { constant: self.constant + c, pinning: Pinning::ModuloConstant, ..self.clone() }
    }

    /// Field with the zero mode folded into the cell values.
    pub fn flattened(&self) -> Vec<f64> {
        self.values.iter().map(|v| v + self.constant).collect()
    }

    pub(crate) fn from_parts(geometry: Geometry, values: Vec<f64>, constant: f64, pinning: Pinning) -> Field {
        Field { geometry, values, constant, pinning }
    }

    /// Bilinear interpolation of the field (including the zero mode) at plane point `z`.
    pub fn interpolate(&self, z: Complex64) -> Result<f64> {
        let v = match &self.geometry {
            Geometry::Planar(g) => interpolate_planar(g, &self.values, z)?,
            Geometry::Cylinder(g) => {
                if z.norm() == 0.0 {
                    return Err(Error::Geometry("origin is not on the cylinder".into()));
                }
                interpolate_cylinder(g, &self.values, z.norm().ln(), z.arg())?
            }
        };
        Ok(v + self.constant)
    }

    /// Interpolation in cylinder coordinates (cylinder geometries only).
    pub fn interpolate_cylinder(&self, t: f64, theta: f64) -> Result<f64> {
        match &self.geometry {
            Geometry::Cylinder(g) => Ok(interpolate_cylinder(g, &self.values, t, theta)? + self.constant),
            Geometry::Planar(_) => Err(Error::Geometry("planar field has no cylinder coordinates".into())),
        }
    }
}

fn interpolate_planar(g: &PlanarGrid, values: &[f64], z: Complex64) -> Result<f64> {
    let n = g.resolution();
    let h = g.cell_size();
    let x = (z.re + g.domain_radius()) / h - 0.5;
    let y = (z.im + g.domain_radius()) / h - 0.5;
    if x < 0.0 || y < 0.0 || x > (n - 1) as f64 || y > (n - 1) as f64 {
        return Err(Error::Geometry(format!("point {z} outside the grid interpolation range")));
    }
    let (c0, r0) = (x.floor() as usize, y.floor() as usize);
    let (c1, r1) = ((c0 + 1).min(n - 1), (r0 + 1).min(n - 1));
    let (fx, fy) = (x - c0 as f64, y - r0 as f64);
    let at = |r: usize, c: usize| values[r * n + c];
    Ok((1.0 - fy) * ((1.0 - fx) * at(r0, c0) + fx * at(r0, c1))
        + fy * ((1.0 - fx) * at(r1, c0) + fx * at(r1, c1)))
}

fn interpolate_cylinder(g: &CylinderGrid, values: &[f64], t: f64, theta: f64) -> Result<f64> {
    let nt = g.n_t();
    let nth = g.n_theta();
    let y = (t - g.t_min()) / g.dt() - 0.5;
    if y < 0.0 || y > (nt - 1) as f64 {
        return Err(Error::Geometry(format!("t = {t} outside the cylinder interpolation range")));
    }
    let x = theta.rem_euclid(2.0 * std::f64::consts::PI) / g.dtheta();
    let r0 = y.floor() as usize;
    let r1 = (r0 + 1).min(nt - 1);
    let c0 = (x.floor() as usize) % nth;
    let c1 = (c0 + 1) % nth;
    let (fx, fy) = (x - x.floor(), y - r0 as f64);
    let at = |r: usize, c: usize| values[r * nth + c];
    Ok((1.0 - fy) * ((1.0 - fx) * at(r0, c0) + fx * at(r0, c1))
        + fy * ((1.0 - fx) * at(r1, c0) + fx * at(r1, c1)))
}
