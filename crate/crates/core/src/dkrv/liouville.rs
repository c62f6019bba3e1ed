use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{InsertionPoint, LqgParams};
use crate::chaos::{gmc_measure_with, Measure, Regularization, ResolvedProbes, SingularPart, SingularTerm};
use crate::ensemble::{Ensemble, EnsembleRecord};
use crate::error::{Error, Result};
use crate::field_core::{
    pin_to_background, BackgroundKind, BackgroundMeasure, DirichletSampler, Field, Geometry,
    WholePlaneCylinderSampler,
};
use crate::rng::{self, SeedRng};

/// How a finite insertion that sits on a cylinder cell center is discretized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionRule {
    /// Closed-form logarithm, evaluated half a cell diagonal away inside the cell.
    #[default]
    HalfDiagonal,
    /// Lattice covariance of the lateral field (cylinder grids only); this is the
    /// singularity produced by sampling the point from the lattice measure itself.
    LatticeGreen,
}

/// `2Q m_ρ(log 1/|z - ·|) + Σ_i α_i G_ρ(z, z_i)` as closed-form terms.
///
/// An insertion at infinity contributes `-α m_ρ(log 1/|z - ·|)`, the `z`-dependent part
/// of `G_ρ(z, w) + α log|w|` as `w → ∞`; for the circle background this is the
/// `α log(|z| ∨ 1)` term.
pub fn liouville_singular_part(
    rho: &BackgroundMeasure,
    params: &LqgParams,
    geom: &Geometry,
    rule: InsertionRule,
) -> Result<SingularPart> {
    let kind = rho.kind();
    if kind == BackgroundKind::Custom {
        return Err(Error::Config("Liouville fields are assembled for the spherical and circle backgrounds".into()));
    }
    if params.insertions.iter().filter(|i| i.point == InsertionPoint::Infinity).count() > 1 {
        return Err(Error::Config("at most one insertion may sit at infinity".into()));
    }
    if let Some(i) = params.insertions.iter().find(|i| i.alpha >= params.q) {
        return Err(Error::Parameter(format!("insertion weight {} is not below Q = {}", i.alpha, params.q)));
    }
    let mut part = SingularPart::none().with(SingularTerm::Potential { coef: 2.0 * params.q, background: kind });
    for ins in &params.insertions {
        let alpha = ins.alpha;
        match ins.point.as_complex() {
            None => {
                part = part.with(SingularTerm::Potential { coef: -alpha, background: kind });
            }
            Some(w) => {
                part = part
                    .with(point_log(alpha, w, geom, rule))
                    .with(SingularTerm::Potential { coef: -alpha, background: kind })
                    .with(SingularTerm::Constant { value: alpha * (rho.theta() - rho.log_potential(w)) });
            }
        }
    }
    Ok(part)
}

fn point_log(alpha: f64, w: Complex64, geom: &Geometry, rule: InsertionRule) -> SingularTerm {
    if let (InsertionRule::LatticeGreen, Geometry::Cylinder(g)) = (rule, geom) {
        if w.norm() > 0.0 {
            if let Some(row) = g.row_of(w.norm().ln()) {
                let col = g.col_of(w.arg());
                let k = row * g.n_theta() + col;
                if (g.center(k) - w).norm() <= 1e-9 * w.norm() {
                    return SingularTerm::LatticeLog { alpha, row, col };
                }
            }
        }
    }
    SingularTerm::Log { alpha, re: w.re, im: w.im }
}

#[derive(Debug, Clone)]
enum GaussianSampler {
    Planar(DirichletSampler),
    Cylinder(WholePlaneCylinderSampler),
}

/// Gaussian part `h_ρ` plus the deterministic singular part of `h_{L(ρ)}`.
#[derive(Debug, Clone)]
pub struct LiouvilleField {
    pub gaussian: Field,
    pub singular: SingularPart,
}

/// One draw of the unit-volume construction.
#[derive(Debug, Clone)]
pub struct WeightedMeasureSample {
    pub measure: Measure,
    pub weight: f64,
    pub field_shift: f64,
    pub log_total: f64,
    pub seed: u64,
}

/// Reweighted sampler of `μ̄_{h_L}` on one grid; immutable and shareable.
#[derive(Debug, Clone)]
pub struct DkrvSampler {
    params: LqgParams,
    rho: BackgroundMeasure,
    geometry: Geometry,
    singular: SingularPart,
    singular_values: Vec<f64>,
    gaussian: GaussianSampler,
    reg: Regularization,
    weight_exponent: f64,
}

impl DkrvSampler {
    pub fn new(params: &LqgParams, rho: &BackgroundMeasure, geometry: &Geometry, rule: InsertionRule) -> Result<Self> {
        let singular = liouville_singular_part(rho, params, geometry, rule)?;
        let singular_values = singular.evaluate(geometry)?;
        let gaussian = match geometry {
            Geometry::Planar(g) => GaussianSampler::Planar(DirichletSampler::new(g)?),
            Geometry::Cylinder(g) => GaussianSampler::Cylinder(WholePlaneCylinderSampler::new(g)),
        };
        Ok(DkrvSampler {
            params: params.clone(),
            rho: rho.clone(),
            geometry: geometry.clone(),
            singular,
            singular_values,
            gaussian,
            reg: Regularization::default(),
            weight_exponent: params.weight_exponent(),
        })
    }

    pub fn with_regularization(mut self, reg: Regularization) -> Self {
        self.reg = reg;
        self
    }

    /// Replaces the exponent `-s/γ` of the importance weight.
    pub fn with_weight_exponent(mut self, e: f64) -> Self {
        self.weight_exponent = e;
        self
    }

    pub fn params(&self) -> &LqgParams {
        &self.params
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn singular(&self) -> &SingularPart {
        &self.singular
    }

    /// `h_ρ`: whole-plane GFF with `(h, ρ) = 0`.
    pub fn gaussian(&self, rng: &mut SeedRng) -> Result<Field> {
        let raw = match &self.gaussian {
            GaussianSampler::Planar(s) => s.sample(rng),
            GaussianSampler::Cylinder(s) => s.sample(rng),
        };
        pin_to_background(&raw, &self.rho)
    }

    pub fn liouville_field(&self, rng: &mut SeedRng) -> Result<LiouvilleField> {
        Ok(LiouvilleField { gaussian: self.gaussian(rng)?, singular: self.singular.clone() })
    }

    /// Unnormalized chaos of `h_ρ` plus the singular part.
    pub fn measure_of(&self, gaussian: &Field) -> Result<Measure> {
        gmc_measure_with(gaussian, self.params.gamma, &self.singular_values, &self.reg)
    }

    pub fn draw(&self, root: u64, index: u64) -> Result<WeightedMeasureSample> {
        let mut r = rng::stream(root, index);
        let h = self.gaussian(&mut r)?;
        let m = self.measure_of(&h)?;
        let log_total = m.log_total();
        if !log_total.is_finite() {
            return Err(Error::Numeric(format!("total mass of replica {index} is not positive and finite")));
        }
        let weight = if self.weight_exponent == 0.0 { 1.0 } else { (self.weight_exponent * log_total).exp() };
        Ok(WeightedMeasureSample {
            measure: m.normalize()?,
            weight,
            field_shift: -log_total / self.params.gamma,
            log_total,
            seed: index,
        })
    }

    pub fn ensemble(&self, n: usize, root: u64, probes: &ResolvedProbes, label: &str) -> Result<Ensemble> {
        let records: Result<Vec<EnsembleRecord>> = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let s = self.draw(root, i)?;
                Ok(EnsembleRecord {
                    seed: i,
                    weight: s.weight,
                    field_shift: s.field_shift,
                    log_total: s.log_total,
                    observables: probes.observe(&s.measure)?,
                })
            })
            .collect();
        let mut e = Ensemble::new(label, root, probes.names.clone());
        e.records = records?;
        e.diagnostics.insert("gamma".into(), self.params.gamma);
        e.diagnostics.insert("weight_exponent".into(), self.weight_exponent);
        e.finish()?;
        Ok(e)
    }
}

/// `n` weighted draws of the unit-volume Liouville measure.
pub fn dkrv_unit_volume_sample(
    params: &LqgParams,
    rho: &BackgroundMeasure,
    geometry: &Geometry,
    n: usize,
    root: u64,
    probes: &ResolvedProbes,
) -> Result<Ensemble> {
    if params.bound_status() == super::BoundStatus::Violated {
        return Err(Error::Parameter("insertions violate the extended Seiberg bound".into()));
    }
    DkrvSampler::new(params, rho, geometry, InsertionRule::default())?.ensemble(n, root, probes, "dkrv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::default_probes;
    use crate::dkrv::{derive_params, three_point_insertions};
    use crate::field_core::CylinderGrid;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn circle_background_matches_explicit_form() {
        let g = 2f64.sqrt();
        let p = derive_params(g, &three_point_insertions(g)).unwrap();
        let geom = Geometry::Cylinder(CylinderGrid::aligned(4, 4, 16).unwrap());
        let part = liouville_singular_part(&BackgroundMeasure::unit_circle(), &p, &geom, InsertionRule::HalfDiagonal)
            .unwrap();
        let v = part.value_at(c(2.0, 0.0)).unwrap();
        assert!((v + g * 2f64.ln()).abs() < 1e-12, "{v}");
        let gamma = 1.3;
        let p = derive_params(gamma, &three_point_insertions(gamma)).unwrap();
        let part = liouville_singular_part(&BackgroundMeasure::unit_circle(), &p, &geom, InsertionRule::HalfDiagonal)
            .unwrap();
        for z in [c(0.3, 0.4), c(-2.0, 1.5), c(0.9, -0.1)] {
            let explicit = -(2.0 * p.q - 3.0 * gamma) * z.norm().max(1.0).ln()
                - gamma * z.norm().ln()
                - gamma * (z - 1.0).norm().ln();
            assert!((part.value_at(z).unwrap() - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_finite_labels_is_symmetric() {
        let gamma = 1.1;
        let mut ins = three_point_insertions(gamma);
        let p = derive_params(gamma, &ins).unwrap();
        ins.swap(0, 1);
        let q = derive_params(gamma, &ins).unwrap();
        let geom = Geometry::Cylinder(CylinderGrid::aligned(4, 4, 16).unwrap());
        for rho in [BackgroundMeasure::unit_circle(), BackgroundMeasure::spherical()] {
            let a = liouville_singular_part(&rho, &p, &geom, InsertionRule::HalfDiagonal).unwrap();
            let b = liouville_singular_part(&rho, &q, &geom, InsertionRule::HalfDiagonal).unwrap();
            let z = c(0.37, -1.2);
            assert!((a.value_at(z).unwrap() - b.value_at(z).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_infinities_are_rejected() {
        let mut ins = three_point_insertions(1.0);
        ins[0] = crate::dkrv::Insertion::at_infinity(1.0);
        let p = derive_params(1.0, &ins).unwrap();
        let geom = Geometry::Cylinder(CylinderGrid::aligned(4, 4, 16).unwrap());
        let r = liouville_singular_part(&BackgroundMeasure::unit_circle(), &p, &geom, InsertionRule::HalfDiagonal);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn weights_are_one_at_s_zero_and_shift_cancels() {
        let g = 2f64.sqrt();
        let p = derive_params(g, &three_point_insertions(g)).unwrap();
        let geom = Geometry::Cylinder(CylinderGrid::aligned(60, 60, 16).unwrap());
        let probes = ResolvedProbes::new(&default_probes(), &geom).unwrap();
        let s = DkrvSampler::new(&p, &BackgroundMeasure::unit_circle(), &geom, InsertionRule::LatticeGreen).unwrap();
        let e = s.ensemble(20, 4, &probes, "t").unwrap();
        assert!(e.records.iter().all(|r| r.weight == 1.0));
        assert_eq!(e.ess(), 20.0);
        let w = e.normalized_weights().unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut r = rng::stream(4, 0);
        let h = s.gaussian(&mut r).unwrap();
        let m0 = s.measure_of(&h).unwrap();
        let m1 = s.measure_of(&h.shifted(1.7)).unwrap();
        assert_eq!(m0.normalize().unwrap(), m1.normalize().unwrap());
        let shift0 = -m0.log_total() / g;
        let shift1 = -m1.log_total() / g;
        // shifted field h + c - log μ/γ is unchanged
        assert!((shift1 + 1.7 - shift0).abs() < 1e-12);
    }

    #[test]
    fn weight_identity() {
        let gamma = 1.0;
        let p = derive_params(gamma, &three_point_insertions(gamma)).unwrap();
        let geom = Geometry::Cylinder(CylinderGrid::aligned(60, 60, 16).unwrap());
        let s = DkrvSampler::new(&p, &BackgroundMeasure::spherical(), &geom, InsertionRule::HalfDiagonal).unwrap();
        let d = s.draw(1, 0).unwrap();
        assert!((d.weight * (d.log_total * p.s / gamma).exp() - 1.0).abs() < 1e-12);
    }
}
