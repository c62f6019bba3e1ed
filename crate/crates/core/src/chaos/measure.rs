use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::Geometry;

/// Nonnegative mass per grid cell.
///
/// Masses are stored relative to `exp(log_scale)` so that totals far outside the
/// range of `f64` stay representable, and so that adding a constant to the
/// underlying field only moves `log_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    geometry: Geometry,
    relative: Vec<f64>,
    log_scale: f64,
    relative_total: f64,
    normalized: bool,
}

impl Measure {
    pub fn from_masses(geometry: Geometry, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != geometry.len() {
            return Err(Error::Geometry(format!("{} masses for {} cells", masses.len(), geometry.len())));
        }
        if let Some(k) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Numeric(format!("invalid mass {} at cell {k}", masses[k])));
        }
        let relative_total = masses.iter().sum();
        Ok(Measure { geometry, relative: masses, log_scale: 0.0, relative_total, normalized: false })
    }

    pub fn zero(geometry: Geometry) -> Self {
        let n = geometry.len();
        Measure { geometry, relative: vec![0.0; n], log_scale: 0.0, relative_total: 0.0, normalized: false }
    }

    /// Measure with cell masses `exp(log_mass[k] + shift)`; `-∞` entries are empty cells.
    pub fn from_log_masses(geometry: Geometry, log_mass: &[f64], shift: f64) -> Result<Self> {
        if let Some(k) = log_mass.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Numeric(format!("non-finite log mass at cell {k}")));
        }
        let top = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Ok(Measure::zero(geometry));
        }
        let relative: Vec<f64> = log_mass.iter().map(|v| (v - top).exp()).collect();
        let relative_total = relative.iter().sum();
        Ok(Measure { geometry, relative, log_scale: top + shift, relative_total, normalized: false })
    }

    /// Rebuilds a measure from stored parts.
    pub fn from_parts(geometry: Geometry, relative: Vec<f64>, log_scale: f64, normalized: bool) -> Result<Self> {
        let mut m = Measure::from_masses(geometry, relative)?;
        m.log_scale = log_scale;
        m.normalized = normalized;
        Ok(m)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.relative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relative.is_empty()
    }

    /// Cell masses divided by `exp(log_scale)`.
    pub fn relative_masses(&self) -> &[f64] {
        &self.relative
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.log_scale.exp() * self.relative_total
    }

    /// `log μ(whole grid)`; `-∞` for the zero measure.
    pub fn log_total(&self) -> f64 {
        self.log_scale + self.relative_total.ln()
    }

    pub fn cell_mass(&self, k: usize) -> f64 {
        self.relative[k] * self.log_scale.exp()
    }

    /// Absolute masses per cell.
    pub fn masses(&self) -> Vec<f64> {
        let s = self.log_scale.exp();
        self.relative.iter().map(|m| m * s).collect()
    }

    pub fn mass_of(&self, cells: impl IntoIterator<Item = usize>) -> f64 {
        self.relative_mass_of(cells) * self.log_scale.exp()
    }

    fn relative_mass_of(&self, cells: impl IntoIterator<Item = usize>) -> f64 {
        cells.into_iter().map(|k| self.relative[k]).sum()
    }

    /// `μ(A) / μ(whole grid)` for a cell set `A`.
    pub fn fraction_of(&self, cells: impl IntoIterator<Item = usize>) -> Result<f64> {
        if self.relative_total <= 0.0 {
            return Err(Error::Degenerate("fraction of a zero measure".into()));
        }
        Ok(self.relative_mass_of(cells) / self.relative_total)
    }

    /// Scaled to total mass one. Already normalized measures are returned unchanged.
    pub fn normalize(&self) -> Result<Measure> {
        if self.normalized {
            return Ok(self.clone());
        }
        if !(self.relative_total > 0.0) {
            return Err(Error::Degenerate("cannot normalize a measure of zero total mass".into()));
        }
        let relative: Vec<f64> = self.relative.iter().map(|m| m / self.relative_total).collect();
        let relative_total = relative.iter().sum();
        Ok(Measure { geometry: self.geometry.clone(), relative, log_scale: 0.0, relative_total, normalized: true })
    }

    /// Same geometry with new relative masses (used by coordinate changes).
    pub(crate) fn with_relative(&self, relative: Vec<f64>) -> Measure {
        let relative_total = relative.iter().sum();
        Measure { geometry: self.geometry.clone(), relative, log_scale: self.log_scale, relative_total, normalized: false }
    }

    pub(crate) fn with_geometry(mut self, geometry: Geometry) -> Measure {
        self.geometry = geometry;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_core::PlanarGrid;

    fn geom() -> Geometry {
        Geometry::Planar(PlanarGrid::new(16, 1.0).unwrap())
    }

    #[test]
    fn normalize_scales_to_one_and_is_idempotent() {
        let masses: Vec<f64> = (0..256).map(|k| (k % 7) as f64 * 0.3).collect();
        let m = Measure::from_masses(geom(), masses).unwrap();
        let n = m.normalize().unwrap();
        assert!((n.total() - 1.0).abs() < 1e-12);
        assert_eq!(n.normalize().unwrap(), n);
        let (a, b) = (0..40, 100..180);
        let ratio = m.mass_of(a.clone()) / m.mass_of(b.clone());
        assert!((ratio - n.mass_of(a) / n.mass_of(b)).abs() < 1e-12 * ratio);
    }

    #[test]
    fn zero_measure_cannot_be_normalized() {
        assert!(matches!(Measure::zero(geom()).normalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn log_masses_survive_extreme_scales() {
        let logs: Vec<f64> = (0..256).map(|k| 2000.0 + k as f64 * 1e-3).collect();
        let m = Measure::from_log_masses(geom(), &logs, 0.0).unwrap();
        assert!(m.total().is_infinite());
        assert!((m.log_total() - (2000.255 + (0..256).map(|k| ((k as f64 - 255.0) * 1e-3).exp()).sum::<f64>().ln())).abs() < 1e-9);
        assert!(m.normalize().unwrap().total().is_finite());
    }

    #[test]
    fn additivity_on_disjoint_sets() {
        let masses: Vec<f64> = (0..256).map(|k| (k as f64).sqrt()).collect();
        let m = Measure::from_masses(geom(), masses).unwrap();
        let a: Vec<usize> = (0..256).filter(|k| k % 3 == 0).collect();
        let b: Vec<usize> = (0..256).filter(|k| k % 3 == 1).collect();
        let ab: Vec<usize> = (0..256).filter(|k| k % 3 != 2).collect();
        assert!((m.mass_of(a) + m.mass_of(b) - m.mass_of(ab)).abs() < 1e-9);
    }
}
