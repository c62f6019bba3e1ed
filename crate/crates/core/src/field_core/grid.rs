use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Square grid of `resolution × resolution` cells covering `[-R, R]²`, with the
/// inscribed disk `R·𝔻` as the active domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarGrid {
    resolution: usize,
    domain_radius: f64,
    cell_size: f64,
    #[serde(skip)]
    mask: Vec<bool>,
}

pub const MIN_PLANAR_RESOLUTION: usize = 16;

impl PlanarGrid {
    pub fn new(resolution: usize, domain_radius: f64) -> Result<Self> {
        if resolution < MIN_PLANAR_RESOLUTION {
            return Err(Error::Config(format!(
                "planar resolution {resolution} below minimum {MIN_PLANAR_RESOLUTION}"
            )));
        }
        if !(domain_radius > 0.0 && domain_radius.is_finite()) {
            return Err(Error::Config(format!("domain radius {domain_radius} must be positive")));
        }
        let cell_size = 2.0 * domain_radius / resolution as f64;
        let mut grid = PlanarGrid { resolution, domain_radius, cell_size, mask: Vec::new() };
        grid.mask = (0..resolution * resolution)
            .map(|k| grid.center(k).norm() < domain_radius)
            .collect();
        Ok(grid)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interior flag per cell (center strictly inside the disk).
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.mask[k]
    }

    /// Center of cell `k = row * resolution + col`; rows run along +y.
    pub fn center(&self, k: usize) -> Complex64 {
        let (row, col) = (k / self.resolution, k % self.resolution);
        let h = self.cell_size;
        Complex64::new(
            -self.domain_radius + (col as f64 + 0.5) * h,
            -self.domain_radius + (row as f64 + 0.5) * h,
        )
    }

    /// Cell containing `z`, if `z` lies in the square.
    pub fn cell_of(&self, z: Complex64) -> Option<usize> {
        let col = ((z.re + self.domain_radius) / self.cell_size).floor();
        let row = ((z.im + self.domain_radius) / self.cell_size).floor();
        let n = self.resolution as f64;
        if col < 0.0 || row < 0.0 || col >= n || row >= n {
            return None;
        }
        Some(row as usize * self.resolution + col as usize)
    }

    pub(crate) fn rebuild_mask(&mut self) {
        if self.mask.len() != self.len() {
            *self = PlanarGrid::new(self.resolution, self.domain_radius)
                .expect("grid parameters were validated at construction");
        }
    }
}

/// Grid on the cylinder `[t_min, t_max] × [0, 2π)` with periodic angle.
///
/// Row `i` is centered at `t_min + (i + ½)·dt`, column `j` at `θ = j·dθ`, so the
/// column-0 cells straddle the ray `θ = 0`. Points map to the plane through
/// `z = exp(t + iθ)`: `t → -∞` is the origin, `t → +∞` is infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    t_min: f64,
    t_max: f64,
    n_t: usize,
    n_theta: usize,
}

pub const MIN_CYLINDER_NTHETA: usize = 8;

impl CylinderGrid {
    pub fn new(t_min: f64, t_max: f64, n_t: usize, n_theta: usize) -> Result<Self> {
        if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::Config(format!("cylinder range [{t_min}, {t_max}] is empty")));
        }
        if n_theta < MIN_CYLINDER_NTHETA {
            return Err(Error::Config(format!(
                "n_theta {n_theta} below minimum {MIN_CYLINDER_NTHETA}"
            )));
        }
        if n_t == 0 {
            return Err(Error::Config("cylinder needs at least one row".into()));
        }
        Ok(CylinderGrid { t_min, t_max, n_t, n_theta })
    }

    /// Square cells (`dt = dθ`) with a row centered exactly on `t = 0`.
    pub fn aligned(rows_below: usize, rows_above: usize, n_theta: usize) -> Result<Self> {
        let d = 2.0 * PI / n_theta as f64;
        let n_t = rows_below + 1 + rows_above;
        let t_min = -(rows_below as f64 + 0.5) * d;
        CylinderGrid::new(t_min, t_min + n_t as f64 * d, n_t, n_theta)
    }

    /// Aligned grid covering at least `[t_lo, t_hi]`.
    pub fn aligned_covering(t_lo: f64, t_hi: f64, n_theta: usize) -> Result<Self> {
        let d = 2.0 * PI / n_theta as f64;
        let below = (-t_lo / d).ceil().max(0.0) as usize;
        let above = (t_hi / d).ceil().max(0.0) as usize;
        CylinderGrid::aligned(below, above, n_theta)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_t as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dt() * self.dtheta()
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t_of_row(&self, row: usize) -> f64 {
        self.t_min + (row as f64 + 0.5) * self.dt()
    }

    pub fn theta_of_col(&self, col: usize) -> f64 {
        col as f64 * self.dtheta()
    }

    /// Row whose cell contains `t`.
    pub fn row_of(&self, t: f64) -> Option<usize> {
        let r = ((t - self.t_min) / self.dt()).floor();
        (r >= 0.0 && r < self.n_t as f64).then_some(r as usize)
    }

    /// Column whose cell contains angle `theta` (any real, reduced mod 2π).
    pub fn col_of(&self, theta: f64) -> usize {
        let d = self.dtheta();
        let c = ((theta.rem_euclid(2.0 * PI) + 0.5 * d) / d).floor() as usize;
        c % self.n_theta
    }

    /// Cylinder coordinates `(t, θ)` of cell `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        (self.t_of_row(k / self.n_theta), self.theta_of_col(k % self.n_theta))
    }

    /// Plane point `exp(t + iθ)` of the center of cell `k`.
    pub fn center(&self, k: usize) -> Complex64 {
        let (t, th) = self.coords(k);
        Complex64::from_polar(t.exp(), th)
    }

    /// Same grid translated by `rows` whole rows along `t`.
    pub fn shifted_rows(&self, rows: i64) -> CylinderGrid {
        let s = rows as f64 * self.dt();
        CylinderGrid { t_min: self.t_min + s, t_max: self.t_max + s, ..self.clone() }
    }
}

/// Discrete geometry a [`Field`](super::Field) or measure lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Planar(PlanarGrid),
    Cylinder(CylinderGrid),
}

impl Geometry {
    pub fn len(&self) -> usize {
        match self {
            Geometry::Planar(g) => g.len(),
            Geometry::Cylinder(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Plane location of the center of cell `k`.
    pub fn center(&self, k: usize) -> Complex64 {
        match self {
            Geometry::Planar(g) => g.center(k),
            Geometry::Cylinder(g) => g.center(k),
        }
    }

    /// Whether cell `k` belongs to the active domain.
    pub fn is_active(&self, k: usize) -> bool {
        match self {
            Geometry::Planar(g) => g.is_interior(k),
            Geometry::Cylinder(_) => true,
        }
    }

    /// Reference area of one cell in the grid's own coordinates.
    pub fn cell_area(&self) -> f64 {
        match self {
            Geometry::Planar(g) => g.cell_area(),
            Geometry::Cylinder(g) => g.cell_area(),
        }
    }

    /// Plane-distance from the center of cell `k` to its corner.
    pub fn half_diagonal(&self, k: usize) -> f64 {
        match self {
            Geometry::Planar(g) => g.cell_size() * std::f64::consts::FRAC_1_SQRT_2,
            Geometry::Cylinder(g) => {
                let (t, _) = g.coords(k);
                0.5 * t.exp() * g.dt().hypot(g.dtheta())
            }
        }
    }

    /// Whether plane point `p` falls in cell `k`.
    pub fn cell_contains(&self, k: usize, p: Complex64) -> bool {
        match self {
            Geometry::Planar(g) => g.cell_of(p) == Some(k),
            Geometry::Cylinder(g) => {
                if p.norm() == 0.0 || !p.is_finite() {
                    return false;
                }
                let (row, col) = (k / g.n_theta(), k % g.n_theta());
                g.row_of(p.norm().ln()) == Some(row) && g.col_of(p.arg()) == col
            }
        }
    }

    pub fn as_planar(&self) -> Option<&PlanarGrid> {
        match self {
            Geometry::Planar(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_cylinder(&self) -> Option<&CylinderGrid> {
        match self {
            Geometry::Cylinder(g) => Some(g),
            _ => None,
        }
    }

    pub(crate) fn restore(&mut self) {
        if let Geometry::Planar(g) = self {
            g.rebuild_mask();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_rejects_small_resolution() {
        assert!(matches!(PlanarGrid::new(8, 1.0), Err(Error::Config(_))));
        assert!(matches!(PlanarGrid::new(0, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn mask_is_strict_interior() {
        let g = PlanarGrid::new(32, 2.0).unwrap();
        for k in 0..g.len() {
            assert_eq!(g.is_interior(k), g.center(k).norm() < 2.0);
        }
        assert!((g.cell_size() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn aligned_cylinder_has_zero_row() {
        let g = CylinderGrid::aligned(10, 5, 32).unwrap();
        assert!(g.t_of_row(10).abs() < 1e-12);
        assert_eq!(g.row_of(0.0), Some(10));
        assert_eq!(g.col_of(0.0), 0);
        assert_eq!(g.col_of(-1e-3), 0);
        assert!((g.dt() - g.dtheta()).abs() < 1e-12);
    }

    #[test]
    fn cylinder_cell_contains_its_center() {
        let g = Geometry::Cylinder(CylinderGrid::aligned(4, 4, 16).unwrap());
        for k in 0..g.len() {
            assert!(g.cell_contains(k, g.center(k)), "cell {k}");
        }
        let p = PlanarGrid::new(16, 1.0).unwrap();
        let g = Geometry::Planar(p);
        for k in 0..g.len() {
            assert!(g.cell_contains(k, g.center(k)));
        }
    }
}
