use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::measure::Measure;
use crate::error::{Error, Result};
use crate::field_core::Geometry;

/// Plane region; a cell belongs to it when its center does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Disk { re: f64, im: f64, radius: f64 },
    Annulus { re: f64, im: f64, inner: f64, outer: f64 },
    /// `Re(z·e^{-iφ}) > offset`.
    HalfPlane { angle: f64, offset: f64 },
    Complement { of: Box<Region> },
    Everything,
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Region::Disk { re, im, radius } => (z - Complex64::new(*re, *im)).norm() < *radius,
            Region::Annulus { re, im, inner, outer } => {
                let d = (z - Complex64::new(*re, *im)).norm();
                d > *inner && d < *outer
            }
            Region::HalfPlane { angle, offset } => (z * Complex64::from_polar(1.0, -angle)).re > *offset,
            Region::Complement { of } => !of.contains(z),
            Region::Everything => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    #[serde(flatten)]
    pub region: Region,
}

impl Probe {
    pub fn new(name: &str, region: Region) -> Self {
        Probe { name: name.to_string(), region }
    }

    /// Active cells whose centers lie in the region.
    pub fn cells(&self, geom: &Geometry) -> Vec<usize> {
        (0..geom.len()).filter(|&k| geom.is_active(k) && self.region.contains(geom.center(k))).collect()
    }
}

/// Default probe set: the unit disk, the annulus `1 < |z| < 2`, the half-plane
/// `Re z > ½` and the disk `|z - 1| < ¼`.
pub fn default_probes() -> Vec<Probe> {
    vec![
        Probe::new("unit_disk", Region::Disk { re: 0.0, im: 0.0, radius: 1.0 }),
        Probe::new("annulus_1_2", Region::Annulus { re: 0.0, im: 0.0, inner: 1.0, outer: 2.0 }),
        Probe::new("half_plane_re_gt_half", Region::HalfPlane { angle: 0.0, offset: 0.5 }),
        Probe::new("disk_near_one", Region::Disk { re: 1.0, im: 0.0, radius: 0.25 }),
    ]
}

/// Probe cell sets resolved once per grid.
#[derive(Debug, Clone)]
pub struct ResolvedProbes {
    pub names: Vec<String>,
    cells: Vec<Vec<usize>>,
}

impl ResolvedProbes {
    pub fn new(probes: &[Probe], geom: &Geometry) -> Result<Self> {
        let mut cells = Vec::with_capacity(probes.len());
        for p in probes {
            let c = p.cells(geom);
            if c.is_empty() {
                return Err(Error::Config(format!("probe '{}' contains no grid cell", p.name)));
            }
            cells.push(c);
        }
        Ok(ResolvedProbes { names: probes.iter().map(|p| p.name.clone()).collect(), cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn observe(&self, measure: &Measure) -> Result<Vec<f64>> {
        self.cells.iter().map(|c| measure.fraction_of(c.iter().copied())).collect()
    }
}

/// `(μ̄(probe_1), …, μ̄(probe_m))`.
pub fn observable_vector(measure: &Measure, probes: &[Probe]) -> Result<Vec<f64>> {
    ResolvedProbes::new(probes, measure.geometry())?.observe(measure)
}
