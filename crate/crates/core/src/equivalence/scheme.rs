//! Disk approximation of the three-insertion sphere: a zero-boundary field on
//! `ε⁻¹𝔻` with two `γ`-log singularities, conditioned on its area and on the
//! unit-circle average.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{check_gamma, gmc_measure_with, liouville_q, Measure, Regularization};
use crate::chaos::{Probe, ResolvedProbes, SingularPart, SingularTerm};
use crate::ensemble::{AcceptanceStats, Ensemble, EnsembleRecord};
use crate::error::{BudgetReport, Error, Result};
use crate::field_core::{DirichletSampler, Field, Geometry, PlanarGrid};
use crate::rng::{self, SeedRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    /// Cells per side of the square covering `ε⁻¹𝔻`.
    pub resolution: usize,
    /// Condition on the circle-average event as well as the area window.
    pub enforce_h: bool,
    pub method: ConditioningMethod,
    pub max_attempts: u64,
}

/// How the conditioning on the area and circle-average events is realized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningMethod {
    /// Redraw the whole field until both events hold.
    Rejection,
    /// Write the Gaussian part as `Y u + h'` with `Y` the unit-circle average and
    /// `h'` independent of `Y`. Given `h'` both events are an interval for `Y`, so
    /// `Y` is drawn from its conditioned Gaussian law and the sample carries the
    /// probability of that interval as importance weight.
    #[default]
    CircleSplit,
}

impl SchemeConfig {
    pub fn new(gamma: f64, epsilon: f64, delta: f64) -> Self {
        SchemeConfig {
            gamma,
            epsilon,
            delta,
            z1: [0.0, 0.0],
            z2: [1.0, 0.0],
            resolution: default_resolution(epsilon),
            enforce_h: true,
            method: ConditioningMethod::default(),
            max_attempts: 100_000,
        }
    }

    pub fn z1(&self) -> Complex64 {
        Complex64::new(self.z1[0], self.z1[1])
    }

    pub fn z2(&self) -> Complex64 {
        Complex64::new(self.z2[0], self.z2[1])
    }

    /// The marked points may sit anywhere in the closed unit disk; in particular
    /// `z₂ = 1` matches the normalization `(0, 1, ∞)`.
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && (self.gamma * self.delta).exp().is_finite()) {
            return Err(Error::Config(format!("delta = {} must be positive with a finite window", self.delta)));
        }
        for (name, z) in [("z1", self.z1()), ("z2", self.z2())] {
            if !(z.norm() <= 1.0) {
                return Err(Error::Config(format!("{name} = {z} lies outside the unit disk")));
            }
        }
        if self.z1() == self.z2() {
            return Err(Error::Config("z1 and z2 coincide".into()));
        }
        if self.resolution < crate::field_core::MIN_PLANAR_RESOLUTION {
            return Err(Error::Config(format!("resolution {} too small", self.resolution)));
        }
        Ok(())
    }

    /// `(2Q - 3γ) log ε`.
    pub fn log_shift(&self) -> f64 {
        let q = liouville_q(self.gamma);
        let c = 2.0 * q - 3.0 * self.gamma;
        // exactly zero at γ = √2, where rounding leaves a few ulps
        if c.abs() < 16.0 * f64::EPSILON * 2.0 * q {
            0.0
        } else {
            c * self.epsilon.ln()
        }
    }

    pub fn window(&self) -> (f64, f64) {
        ((-self.gamma * self.delta).exp(), (self.gamma * self.delta).exp())
    }

    pub fn h_threshold(&self) -> f64 {
        -self.epsilon.ln().abs().powf(2.0 / 3.0)
    }
}

/// Eight cells per unit length, so the unit disk and the probes are resolved.
pub fn default_resolution(epsilon: f64) -> usize {
    let r = (16.0 / epsilon).ceil() as usize;
    r + r % 2
}

/// Field of one scheme draw: the zero-boundary part and the deterministic part.
#[derive(Debug, Clone)]
pub struct SchemeField {
    pub gaussian: Field,
    pub singular: SingularPart,
    /// `max_z |r_ε(z)|` over the grid, with `r_ε = γ Σ log|1 - ε² z̄_i z|`; not
    /// part of the field.
    pub r_eps_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventFlags {
    pub total_mass: f64,
    pub log_total: f64,
    /// Area in `[e^{-γδ}, e^{γδ}]`.
    pub e_flag: bool,
    /// Unit-circle average of the Gaussian part.
    pub a_eps: f64,
    /// `A_ε + (2Q - 3γ) log ε`.
    pub a_tilde: f64,
    /// `Ã_ε ≥ -|log ε|^{2/3}`.
    pub h_flag: bool,
}

/// Sampler for the scheme on one grid; immutable and shareable.
#[derive(Debug, Clone)]
pub struct SchemeSampler {
    config: SchemeConfig,
    geometry: Geometry,
    sampler: DirichletSampler,
    singular: SingularPart,
    singular_values: Vec<f64>,
    circle: Vec<(usize, f64)>,
    /// `Cov(h_k, A) / Var(A)` for the circle average `A`.
    split: Vec<f64>,
    circle_sd: f64,
    r_eps_max: f64,
}

/// One conditioned draw.
#[derive(Debug, Clone)]
pub struct SchemeDraw {
    pub measure: Measure,
    pub flags: EventFlags,
    pub weight: f64,
    pub acceptance: AcceptanceStats,
}

impl SchemeSampler {
    pub fn new(config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let grid = PlanarGrid::new(config.resolution, 1.0 / config.epsilon)?;
        let geometry = Geometry::Planar(grid.clone());
        let g = config.gamma;
        let singular = SingularPart::none()
            .with(SingularTerm::Constant { value: config.log_shift() })
            .with(SingularTerm::Log { alpha: g, re: config.z1[0], im: config.z1[1] })
            .with(SingularTerm::Log { alpha: g, re: config.z2[0], im: config.z2[1] });
        let singular_values = singular.evaluate(&geometry)?;
        let circle = crate::field_core::circle_weights(&geometry, Complex64::new(0.0, 0.0), 1.0)?;
        let e2 = config.epsilon * config.epsilon;
        let r_eps_max = (0..grid.len())
            .filter(|&k| grid.is_interior(k))
            .map(|k| {
                let z = grid.center(k);
                let r: f64 = [config.z1(), config.z2()]
                    .iter()
                    .map(|zi| g * (Complex64::new(1.0, 0.0) - e2 * zi.conj() * z).norm().ln())
                    .sum();
                r.abs()
            })
            .fold(0.0, f64::max);
        let sampler = DirichletSampler::new(&grid)?;
        let mut b = vec![0.0; grid.len()];
        for &(k, w) in &circle {
            b[k] += w;
        }
        let cov = sampler.covariance_apply(&b);
        let var: f64 = b.iter().zip(&cov).map(|(x, y)| x * y).sum();
        let split = cov.iter().map(|c| c / var).collect();
        Ok(SchemeSampler {
            config: config.clone(),
            geometry,
            sampler,
            singular,
            singular_values,
            circle,
            split,
            circle_sd: var.sqrt(),
            r_eps_max,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn r_eps_max(&self) -> f64 {
        self.r_eps_max
    }

    pub fn scheme_field(&self, rng: &mut SeedRng) -> SchemeField {
        SchemeField { gaussian: self.sampler.sample(rng), singular: self.singular.clone(), r_eps_max: self.r_eps_max }
    }

    fn measure_of(&self, f: &SchemeField) -> Result<Measure> {
        let values = if f.singular == self.singular {
            std::borrow::Cow::Borrowed(&self.singular_values)
        } else {
            std::borrow::Cow::Owned(f.singular.evaluate(f.gaussian.geometry())?)
        };
        gmc_measure_with(&f.gaussian, self.config.gamma, &values, &Regularization::default())
    }

    pub fn compute_events(&self, f: &SchemeField) -> Result<EventFlags> {
        let m = self.measure_of(f)?;
        Ok(self.flags(&m, f))
    }

    fn flags(&self, m: &Measure, f: &SchemeField) -> EventFlags {
        let log_total = m.log_total();
        let v = f.gaussian.values();
        let a_eps = self.circle.iter().map(|(k, w)| w * v[*k]).sum::<f64>() + f.gaussian.constant();
        let a_tilde = a_eps + self.config.log_shift();
        EventFlags {
            total_mass: log_total.exp(),
            log_total,
            e_flag: log_total.abs() <= self.config.gamma * self.config.delta,
            a_eps,
            a_tilde,
            h_flag: a_tilde >= self.config.h_threshold(),
        }
    }

    /// Exact variance of the unit-circle average of the Gaussian part.
    pub fn circle_variance(&self) -> f64 {
        self.circle_sd * self.circle_sd
    }

    pub fn sample(&self, rng: &mut SeedRng) -> Result<SchemeDraw> {
        match self.config.method {
            ConditioningMethod::Rejection => self.sample_rejection(rng),
            ConditioningMethod::CircleSplit => self.sample_split(rng),
        }
    }

    /// Attempts until both events hold (only the area event without `enforce_h`).
    pub fn sample_rejection(&self, rng: &mut SeedRng) -> Result<SchemeDraw> {
        let mut attempts = 0;
        while attempts < self.config.max_attempts {
            attempts += 1;
            let f = self.scheme_field(rng);
            let m = self.measure_of(&f)?;
            let flags = self.flags(&m, &f);
            if flags.e_flag && (flags.h_flag || !self.config.enforce_h) {
                let acceptance = AcceptanceStats { attempts, accepted: 1 };
                return Ok(SchemeDraw { measure: m.normalize()?, flags, weight: 1.0, acceptance });
            }
        }
        Err(Error::Budget(BudgetReport { attempts, accepted: 0, acceptance_rate: 0.0, floor: 0.0 }))
    }

    /// One field draw with the circle average resampled inside the event interval.
    pub fn sample_split(&self, rng: &mut SeedRng) -> Result<SchemeDraw> {
        let c = &self.config;
        let gamma = c.gamma;
        let h0 = self.sampler.sample(rng);
        let v = h0.values();
        let a0: f64 = self.circle.iter().map(|(k, w)| w * v[*k]).sum();
        let rest: Vec<f64> = v.iter().zip(&self.split).map(|(x, u)| x - a0 * u).collect();
        let rest = Field::new(self.geometry.clone(), rest, h0.pinning())?;
        let m_rest = gmc_measure_with(&rest, gamma, &self.singular_values, &Regularization::default())?;
        // log area as a function of the circle average y
        let terms: Vec<(f64, f64)> = m_rest
            .relative_masses()
            .iter()
            .zip(&self.split)
            .filter(|(r, _)| **r > 0.0)
            .map(|(r, u)| (r.ln(), gamma * u))
            .collect();
        let scale = m_rest.log_scale();
        let log_area = |y: f64| -> (f64, f64) {
            let top = terms.iter().map(|(l, g)| l + g * y).fold(f64::NEG_INFINITY, f64::max);
            let (mut s0, mut s1) = (0.0, 0.0);
            for (l, g) in &terms {
                let e = (l + g * y - top).exp();
                s0 += e;
                s1 += g * e;
            }
            (scale + top + s0.ln(), s1 / s0)
        };
        let gd = gamma * c.delta;
        let y_lo = solve_increasing(&log_area, -gd)?;
        let y_hi = solve_increasing(&log_area, gd)?;
        let lo = if c.enforce_h { y_lo.max(c.h_threshold() - c.log_shift()) } else { y_lo };
        let sd = self.circle_sd;
        let (y, weight) = match crate::stats::truncated_normal(lo / sd, y_hi / sd, rng) {
            Some((z, p)) => (z * sd, p),
            // the events cannot hold for this h'; keep a zero-weight record
            None => (y_hi, 0.0),
        };
        let values: Vec<f64> = rest.values().iter().zip(&self.split).map(|(x, u)| x + y * u).collect();
        let f = SchemeField {
            gaussian: Field::new(self.geometry.clone(), values, h0.pinning())?,
            singular: self.singular.clone(),
            r_eps_max: self.r_eps_max,
        };
        let m = self.measure_of(&f)?;
        let flags = self.flags(&m, &f);
        Ok(SchemeDraw { measure: m.normalize()?, flags, weight, acceptance: AcceptanceStats { attempts: 1, accepted: 1 } })
    }

    pub fn ensemble(&self, n: usize, root: u64, probes: &[Probe], label: &str) -> Result<Ensemble> {
        let resolved = ResolvedProbes::new(probes, &self.geometry)?;
        let out: Result<Vec<(EnsembleRecord, AcceptanceStats, bool)>> = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let d = self.sample(&mut rng::stream(root, i))?;
                let rec = EnsembleRecord {
                    seed: i,
                    weight: d.weight,
                    field_shift: 0.0,
                    log_total: d.flags.log_total,
                    observables: resolved.observe(&d.measure)?,
                };
                Ok((rec, d.acceptance, d.flags.h_flag))
            })
            .collect();
        let mut ens = Ensemble::new(label, root, resolved.names.clone());
        let mut acc = AcceptanceStats::default();
        let mut h_true = 0usize;
        for (rec, a, h) in out? {
            ens.records.push(rec);
            acc.merge(a);
            h_true += usize::from(h);
        }
        ens.acceptance = Some(acc);
        let c = &self.config;
        ens.diagnostics.insert("gamma".into(), c.gamma);
        ens.diagnostics.insert("epsilon".into(), c.epsilon);
        ens.diagnostics.insert("delta".into(), c.delta);
        ens.diagnostics.insert("acceptance_rate".into(), acc.rate());
        ens.diagnostics.insert("r_eps_max".into(), self.r_eps_max);
        ens.diagnostics.insert("h_flag_fraction".into(), h_true as f64 / n.max(1) as f64);
        ens.diagnostics.insert("ess".into(), ens.ess());
        if !c.enforce_h && c.gamma < 2f64.sqrt() {
            ens.warnings.push("circle-average event dropped below gamma = sqrt 2".into());
        }
        ens.finish()?;
        Ok(ens)
    }
}

/// Root of an increasing convex function by safeguarded Newton steps.
fn solve_increasing(f: &dyn Fn(f64) -> (f64, f64), target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut k = 0;
    while f(lo).0 > target {
        lo = 2.0 * lo - 1.0;
        k += 1;
        if k > 200 {
            return Err(Error::Numeric("area does not decrease with the circle average".into()));
        }
    }
    while f(hi).0 < target {
        hi = 2.0 * hi + 1.0;
        k += 1;
        if k > 400 {
            return Err(Error::Numeric("area does not increase with the circle average".into()));
        }
    }
    let mut y = hi;
    for _ in 0..200 {
        let (v, d) = f(y);
        let err = v - target;
        if err.abs() <= 1e-12 * (1.0 + target.abs()) {
            return Ok(y);
        }
        if err > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let step = y - err / d;
        y = if d > 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-13 * (1.0 + y.abs()) {
            return Ok(y);
        }
    }
    Ok(y)
}

/// Energy distances between scheme ensembles at successive `ε` of a ladder, with
/// a fixed number of cells per unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonLadder {
    pub epsilons: Vec<f64>,
    pub ess: Vec<f64>,
    /// `distances[i]` compares `epsilons[i]` with `epsilons[i + 1]`.
    pub distances: Vec<f64>,
}

impl EpsilonLadder {
    pub fn non_increasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn epsilon_ladder(
    base: &SchemeConfig,
    epsilons: &[f64],
    cells_per_unit: usize,
    n: usize,
    root: u64,
    probes: &[Probe],
) -> Result<EpsilonLadder> {
    let mut ens = Vec::new();
    for (i, &eps) in epsilons.iter().enumerate() {
        let r = (2.0 * cells_per_unit as f64 / eps).ceil() as usize;
        let c = SchemeConfig { epsilon: eps, resolution: r + r % 2, ..base.clone() };
        ens.push(SchemeSampler::new(&c)?.ensemble(n, rng::derive_root(root, &format!("eps{i}")), probes, "scheme")?);
    }
    let distances = ens
        .windows(2)
        .map(|w| {
            let pa = crate::stats::self_normalize(&w[0].weights())?;
            let pb = crate::stats::self_normalize(&w[1].weights())?;
            Ok(crate::stats::energy_distance(&w[0].observables(), &pa, &w[1].observables(), &pb))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EpsilonLadder { epsilons: epsilons.to_vec(), ess: ens.iter().map(|e| e.ess()).collect(), distances })
}

pub fn scheme_sample(config: &SchemeConfig, n: usize, root: u64, probes: &[Probe]) -> Result<Ensemble> {
    SchemeSampler::new(config)?.ensemble(n, root, probes, "scheme")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut c = SchemeConfig::new(1.6, 1.0 / 16.0, 0.3);
        assert!(c.validate().is_ok());
        c.z2 = [0.0, 0.0];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.z2 = [1.5, 0.0];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = SchemeConfig::new(1.6, 1.0, 0.3);
        assert!(c.validate().is_err());
    }

    #[test]
    fn log_shift_vanishes_at_sqrt_two() {
        assert_eq!(SchemeConfig::new(2f64.sqrt(), 1.0 / 16.0, 0.3).log_shift(), 0.0);
        assert!(SchemeConfig::new(1.6, 1.0 / 16.0, 0.3).log_shift() > 0.0);
    }

    #[test]
    fn events_follow_definitions() {
        let mut c = SchemeConfig::new(2f64.sqrt(), 1.0 / 8.0, 0.3);
        c.resolution = 64;
        let s = SchemeSampler::new(&c).unwrap();
        let mut r = rng::stream(1, 0);
        let mut f = s.scheme_field(&mut r);
        // zero Gaussian part: A_ε = 0 so the circle event holds at γ = √2
        f.gaussian = Field::constant_field(f.gaussian.geometry().clone(), 0.0);
        let e = s.compute_events(&f).unwrap();
        assert_eq!(e.a_eps, 0.0);
        assert!(e.h_flag);
        // shift the constant so the area is exactly one
        f.singular = f.singular.clone().with(SingularTerm::Constant { value: -e.log_total / c.gamma });
        let e = s.compute_events(&f).unwrap();
        assert!(e.log_total.abs() < 1e-12 && e.e_flag);
        assert!(s.r_eps_max() < 2.0 * c.gamma * c.epsilon);
    }

    #[test]
    fn singular_part_dominated_by_log_near_marked_point() {
        let c = SchemeConfig::new(1.6, 1.0 / 16.0, 0.3);
        let s = SchemeSampler::new(&c).unwrap();
        let z1 = c.z1();
        for off in [1e-2, 1e-4, 1e-6] {
            let z = z1 + Complex64::new(off, 0.0);
            let v = s.singular.value_at(z).unwrap();
            // the remainder stays bounded while the logarithm grows
            assert!((v + c.gamma * off.ln() - c.log_shift()).abs() < 0.02, "{v}");
        }
    }
}
