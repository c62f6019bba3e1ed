use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chaos::Measure;
use crate::error::{Error, Result};
use crate::field_core::{Field, Geometry, Pinning};

/// `ψ(z) = (az + b)/(cz + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.is_finite() {
            return Err(Error::Parameter("degenerate Möbius map (ad - bc = 0)".into()));
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Mobius { a: o, b: z, c: z, d: o }
    }

    pub fn inversion() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Mobius { a: z, b: o, c: o, d: z }
    }

    /// `z ↦ z / w`.
    pub fn scaling(w: Complex64) -> Result<Self> {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Mobius::new(o, z, z, w)
    }

    pub fn is_identity(&self) -> bool {
        *self == Mobius::identity()
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// `|ψ'(z)| = |ad - bc| / |cz + d|²`.
    pub fn derivative_norm(&self, z: Complex64) -> f64 {
        (self.a * self.d - self.b * self.c).norm() / (self.c * z + self.d).norm_sqr()
    }
}

/// Result of a coordinate change, with the part that fell outside the target grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed<T> {
    pub value: T,
    /// Fields: fraction of target cells whose preimage left the source grid.
    /// Measures: mass that left the target grid.
    pub clipped: f64,
}

/// `h∘ψ + Q log|ψ'|`, bilinearly resampled at the target cell centers.
pub fn mobius_field(field: &Field, psi: &Mobius, q: f64, target: &Geometry) -> Result<Transformed<Field>> {
    if psi.is_identity() && field.geometry() == target {
        return Ok(Transformed { value: field.clone(), clipped: 0.0 });
    }
    let mut clipped = 0usize;
    let values = (0..target.len())
        .map(|k| {
            if !target.is_active(k) {
                return 0.0;
            }
            let z = target.center(k);
            let w = psi.apply(z);
            match field.interpolate(w) {
                Ok(v) => v + q * psi.derivative_norm(z).ln(),
                Err(_) => {
                    clipped += 1;
                    0.0
                }
            }
        })
        .collect();
    let clipped = clipped as f64 / target.len() as f64;
    Ok(Transformed { value: Field::new(target.clone(), values, Pinning::ModuloConstant)?, clipped })
}

/// Pushforward `ψ_* μ`: each cell's mass moves to the target cell containing the
/// image of its center.
pub fn mobius_measure(measure: &Measure, psi: &Mobius, target: &Geometry) -> Result<Transformed<Measure>> {
    if psi.is_identity() && measure.geometry() == target {
        return Ok(Transformed { value: measure.clone(), clipped: 0.0 });
    }
    let src = measure.geometry();
    let rel = measure.relative_masses();
    let mut out = vec![0.0; target.len()];
    let mut lost = 0.0;
    for (k, m) in rel.iter().enumerate() {
        if *m == 0.0 {
            continue;
        }
        match locate(target, psi.apply(src.center(k))) {
            Some(j) if target.is_active(j) => out[j] += m,
            _ => lost += m,
        }
    }
    let scale = measure.log_scale().exp();
    let value = measure.with_relative(out).with_geometry(target.clone());
    Ok(Transformed { value, clipped: lost * scale })
}

fn locate(geom: &Geometry, z: Complex64) -> Option<usize> {
    if !z.is_finite() {
        return None;
    }
    match geom {
        Geometry::Planar(g) => g.cell_of(z),
        Geometry::Cylinder(g) => {
            if z.norm() == 0.0 {
                return None;
            }
            let row = g.row_of(z.norm().ln())?;
            Some(row * g.n_theta() + g.col_of(z.arg()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{gmc_measure, SingularPart};
    use crate::field_core::{CylinderGrid, WholePlaneCylinderSampler};

    fn sample_measure() -> Measure {
        let g = CylinderGrid::new(-4.0, 4.0, 80, 32).unwrap();
        let f = WholePlaneCylinderSampler::new(&g).sample(&mut crate::rng::stream(8, 0));
        gmc_measure(&f, 1.2, &SingularPart::none()).unwrap()
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let o = Complex64::new(1.0, 0.0);
        assert!(matches!(Mobius::new(o, o, o, o), Err(Error::Parameter(_))));
    }

    #[test]
    fn identity_is_exact() {
        let m = sample_measure();
        let t = mobius_measure(&m, &Mobius::identity(), m.geometry()).unwrap();
        assert_eq!(t.value, m);
        assert_eq!(t.clipped, 0.0);
    }

    #[test]
    fn inversion_swaps_disk_and_complement() {
        let m = sample_measure();
        let geom = m.geometry().clone();
        let t = mobius_measure(&m, &Mobius::inversion(), &geom).unwrap();
        let inside = |g: &Geometry| (0..g.len()).filter(|&k| g.center(k).norm() < 1.0).collect::<Vec<_>>();
        let outside = |g: &Geometry| (0..g.len()).filter(|&k| g.center(k).norm() >= 1.0).collect::<Vec<_>>();
        let after = t.value.mass_of(inside(&geom));
        let before = m.mass_of(outside(&geom));
        assert!((after / before - 1.0).abs() < 1e-3);
        assert!((t.value.total() + t.clipped - m.total()).abs() <= 1e-9 * m.total());
    }
}
