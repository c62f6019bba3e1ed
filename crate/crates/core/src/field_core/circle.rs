use num_complex::Complex64;
use std::f64::consts::PI;

use super::field::Field;
use super::grid::Geometry;
use crate::error::{Error, Result};

/// Minimum number of quadrature points on a circle.
pub const MIN_CIRCLE_POINTS: usize = 64;

/// Quadrature points used for a circle of `radius` on a grid of local cell size `h`.
pub fn circle_point_count(radius: f64, h: f64) -> usize {
    MIN_CIRCLE_POINTS.max((2.0 * PI * radius / h).ceil() as usize)
}

/// Local plane cell size at `center` (cylinder cells grow like `|z|`).
fn local_cell_size(geom: &Geometry, center: Complex64, radius: f64) -> Result<f64> {
    match geom {
        Geometry::Planar(g) => {
            if center.norm() + radius >= g.domain_radius() {
                return Err(Error::Geometry(format!(
                    "circle |z - {center}| = {radius} leaves the domain of radius {}",
                    g.domain_radius()
                )));
            }
            Ok(g.cell_size())
        }
        Geometry::Cylinder(g) => {
            let inner = (center.norm() - radius).abs().max(f64::MIN_POSITIVE);
            Ok(inner.min(radius) * g.dt())
        }
    }
}

/// Mean of the bilinearly interpolated field over the circle `|z - center| = radius`.
pub fn circle_average(field: &Field, center: Complex64, radius: f64) -> Result<f64> {
    let geom = field.geometry();
    let h = local_cell_size(geom, center, radius)?;
    if let Geometry::Planar(g) = geom {
        if radius < 2.0 * g.cell_size() {
            return Err(Error::Geometry(format!(
                "radius {radius} below two cell sizes ({})",
                2.0 * g.cell_size()
            )));
        }
    }
    if let (Geometry::Cylinder(g), true) = (geom, center.norm() == 0.0) {
        // a circle around the origin is a single row of the cylinder
        return row_average(field, g, radius.ln());
    }
    let n = circle_point_count(radius, h);
    let mut acc = 0.0;
    for m in 0..n {
        let z = center + Complex64::from_polar(radius, 2.0 * PI * m as f64 / n as f64);
        acc += field.interpolate(z)?;
    }
    Ok(acc / n as f64)
}

fn row_average(field: &Field, g: &super::grid::CylinderGrid, t: f64) -> Result<f64> {
    let nth = g.n_theta();
    let y = (t - g.t_min()) / g.dt() - 0.5;
    if y < 0.0 || y > (g.n_t() - 1) as f64 {
        return Err(Error::Geometry(format!("circle at t = {t} outside the cylinder")));
    }
    let r0 = y.floor() as usize;
    let r1 = (r0 + 1).min(g.n_t() - 1);
    let f = y - r0 as f64;
    let v = field.values();
    let mean = |r: usize| v[r * nth..(r + 1) * nth].iter().sum::<f64>() / nth as f64;
    Ok((1.0 - f) * mean(r0) + f * mean(r1) + field.constant())
}

/// Cell weights `w` such that `circle_average(f) = Σ w_k f_k` on a planar grid
/// (ignoring the zero mode). Used to compute exact lattice variances.
pub fn circle_weights(geom: &Geometry, center: Complex64, radius: f64) -> Result<Vec<(usize, f64)>> {
    let g = geom
        .as_planar()
        .ok_or_else(|| Error::Geometry("circle weights are defined for planar grids".into()))?;
    let h = local_cell_size(geom, center, radius)?;
    let n = circle_point_count(radius, h);
    let res = g.resolution();
    let mut w = std::collections::BTreeMap::<usize, f64>::new();
    for m in 0..n {
        let z = center + Complex64::from_polar(radius, 2.0 * PI * m as f64 / n as f64);
        let x = (z.re + g.domain_radius()) / h - 0.5;
        let y = (z.im + g.domain_radius()) / h - 0.5;
        let (c0, r0) = (x.floor() as usize, y.floor() as usize);
        let (fx, fy) = (x - c0 as f64, y - r0 as f64);
        for (r, c, wt) in [
            (r0, c0, (1.0 - fx) * (1.0 - fy)),
            (r0, c0 + 1, fx * (1.0 - fy)),
            (r0 + 1, c0, (1.0 - fx) * fy),
            (r0 + 1, c0 + 1, fx * fy),
        ] {
            *w.entry(r.min(res - 1) * res + c.min(res - 1)).or_default() += wt / n as f64;
        }
    }
    Ok(w.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_core::{CylinderGrid, PlanarGrid, Pinning};

    #[test]
    fn constant_field_averages_to_constant() {
        let g = Geometry::Planar(PlanarGrid::new(64, 4.0).unwrap());
        let f = Field::constant_field(g, 1.75);
        assert_eq!(circle_average(&f, Complex64::new(0.5, -0.2), 1.0).unwrap(), 1.75);
    }

    #[test]
    fn log_field_average() {
        let gamma = 1.3;
        let grid = PlanarGrid::new(256, 4.0).unwrap();
        let values = (0..grid.len())
            .map(|k| {
                let r = grid.center(k).norm();
                -gamma * r.ln()
            })
            .collect();
        let f = Field::new(Geometry::Planar(grid), values, Pinning::ModuloConstant).unwrap();
        for r in [0.5, 1.0, 2.5] {
            let a = circle_average(&f, Complex64::new(0.0, 0.0), r).unwrap();
            assert!((a + gamma * f64::ln(r)).abs() < 1e-3, "r = {r}: {a}");
        }
    }

    #[test]
    fn circle_outside_domain_is_rejected() {
        let g = Geometry::Planar(PlanarGrid::new(64, 2.0).unwrap());
        let f = Field::constant_field(g, 0.0);
        assert!(matches!(circle_average(&f, Complex64::new(1.5, 0.0), 1.0), Err(Error::Geometry(_))));
        assert!(matches!(circle_average(&f, Complex64::new(0.0, 0.0), 0.05), Err(Error::Geometry(_))));
    }

    #[test]
    fn weights_reproduce_average() {
        let grid = PlanarGrid::new(64, 2.0).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|k| (k as f64 * 0.37).sin()).collect();
        let geom = Geometry::Planar(grid);
        let f = Field::new(geom.clone(), values.clone(), Pinning::ModuloConstant).unwrap();
        let c = Complex64::new(0.1, 0.2);
        let w = circle_weights(&geom, c, 1.0).unwrap();
        let via_w: f64 = w.iter().map(|(k, x)| x * values[*k]).sum();
        assert!((via_w - circle_average(&f, c, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cylinder_row_average() {
        let g = CylinderGrid::aligned(4, 4, 16).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|k| g.coords(k).0 * 2.0 + (3.0 * g.coords(k).1).cos()).collect();
        let f = Field::new(Geometry::Cylinder(g), values, Pinning::ModuloConstant).unwrap();
        let a = circle_average(&f, Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert!(a.abs() < 1e-12);
        let a = circle_average(&f, Complex64::new(0.0, 0.0), 0.2f64.exp()).unwrap();
        assert!((a - 0.4).abs() < 1e-12);
    }
}
