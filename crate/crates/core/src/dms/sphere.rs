//! Unit-area quantum spheres on the cylinder `z = exp(t + iθ)`.
//!
//! Fields are stored in plane coordinates on a cylinder grid, so the chaos of a
//! stored field is reproduced by [`gmc_measure`](crate::chaos::gmc_measure) with
//! no singular part. The cylinder-coordinate field is `X = h + Q t`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radial::{argmax, sample_bessel_radial, RadialPath};
use crate::chaos::{base_log_mass, check_gamma, liouville_q, Measure, Probe, Regularization};
use crate::ensemble::{AcceptanceStats, Ensemble, EnsembleRecord};
use crate::error::{BudgetReport, Error, Result};
use crate::field_core::{brownian_rows, AngularBoundary, AngularSampler, CylinderGrid, Field, Geometry, Pinning};
use crate::rng::{self, SeedRng};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Embedding {
    /// Radial maximum at `t = 0`.
    Maxima,
    /// Marked points at `0`, `1` and `∞`.
    #[serde(rename = "mobius-(0,1,inf)")]
    Mobius01Inf,
}

/// Marked point in cylinder coordinates; the ends `t = ±∞` are implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub t: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSample {
    pub field: Field,
    pub measure: Measure,
    pub marked_points: Vec<MarkedPoint>,
    pub embedding: Embedding,
    /// Log of the quantum area before normalization.
    pub log_total: f64,
    /// Importance weight (1 for rejection-sampled spheres).
    pub weight: f64,
    pub acceptance: AcceptanceStats,
}

impl SphereSample {
    pub fn grid(&self) -> &CylinderGrid {
        self.field.geometry().as_cylinder().expect("sphere samples live on the cylinder")
    }

    /// Circle means of `X = h + Q t`, one per row.
    pub fn radial_path(&self, gamma: f64) -> RadialPath {
        let g = self.grid();
        let q = liouville_q(gamma);
        let nth = g.n_theta();
        let v = self.field.values();
        let t: Vec<f64> = (0..g.n_t()).map(|r| g.t_of_row(r)).collect();
        let x = t
            .iter()
            .enumerate()
            .map(|(r, tr)| v[r * nth..(r + 1) * nth].iter().sum::<f64>() / nth as f64 + self.field.constant() + q * tr)
            .collect();
        RadialPath::new(t, x)
    }
}

/// Row-major cylinder-coordinate values `X` to a plane-coordinate field plus its chaos.
fn assemble(gamma: f64, grid: CylinderGrid, x: Vec<f64>) -> Result<(Field, Measure)> {
    let q = liouville_q(gamma);
    let nth = grid.n_theta();
    let geom = Geometry::Cylinder(grid.clone());
    let base = base_log_mass(&geom, gamma, &Regularization::default());
    let logs: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, xv)| base[k] + gamma * (xv - q * grid.t_of_row(k / nth)))
        .collect();
    let measure = Measure::from_log_masses(geom.clone(), &logs, 0.0)?;
    let h = x.iter().enumerate().map(|(k, xv)| xv - q * grid.t_of_row(k / nth)).collect();
    Ok((Field::new(geom, h, Pinning::ModuloConstant)?, measure))
}

/// Grid translated so that the center of `row` sits at `t = 0`.
fn recentered(grid: &CylinderGrid, row: usize) -> Result<CylinderGrid> {
    let s = grid.t_of_row(row);
    CylinderGrid::new(grid.t_min() - s, grid.t_max() - s, grid.n_t(), grid.n_theta())
}

/// Rejection sampler for the disk-limiting construction of the two-point sphere.
///
/// The field is `h₀ - γ log|z| - C` on the unit disk, with `h₀` zero on the unit
/// circle; on the cylinder `t = log|z| < 0` it is a Brownian motion started from 0
/// at `t = 0` plus the killed lateral field, with drift `(Q - γ) t` in cylinder
/// coordinates. Samples whose area lies in `[e^{-γδ}, e^{γδ}]` are kept.
#[derive(Debug, Clone)]
pub struct LimitingSphere {
    gamma: f64,
    c: f64,
    delta: f64,
    grid: CylinderGrid,
    angular: AngularSampler,
    pub max_attempts: u64,
    pub acceptance_floor: f64,
}

impl LimitingSphere {
    /// `grid` must cover `t < 0` and end at `t = 0`.
    pub fn new(gamma: f64, c: f64, delta: f64, grid: &CylinderGrid) -> Result<Self> {
        check_gamma(gamma)?;
        if !(c > 0.0 && delta > 0.0) {
            return Err(Error::Parameter(format!("need C > 0 and δ > 0, got C = {c}, δ = {delta}")));
        }
        if grid.t_max().abs() > 1e-12 {
            return Err(Error::Geometry(format!("limiting grid must end at t = 0, ends at {}", grid.t_max())));
        }
        Ok(LimitingSphere {
            gamma,
            c,
            delta,
            grid: grid.clone(),
            angular: AngularSampler::new(grid, AngularBoundary::DirichletAbove(0.0)),
            max_attempts: 2_000_000,
            acceptance_floor: 0.0,
        })
    }

    /// Half-cylinder of square cells deep enough that the discarded mass beyond
    /// the far end is negligible: the path has to climb about `C` and then decays
    /// at rate `γ(Q - γ)` in log-mass.
    pub fn default_grid(gamma: f64, c: f64, n_theta: usize) -> Result<CylinderGrid> {
        check_gamma(gamma)?;
        let a = liouville_q(gamma) - gamma;
        let depth = (c + 4.0) / a + 16.0 / (gamma * a);
        let d = 2.0 * std::f64::consts::PI / n_theta as f64;
        let rows = (depth / d).ceil() as usize;
        CylinderGrid::new(-(rows as f64) * d, 0.0, rows, n_theta)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    /// `[e^{-γδ}, e^{γδ}]`.
    pub fn window(&self) -> (f64, f64) {
        ((-self.gamma * self.delta).exp(), (self.gamma * self.delta).exp())
    }

    /// One draw of the unconditioned field as cylinder values `X`.
    fn draw_x(&self, rng: &mut SeedRng) -> Vec<f64> {
        let g = &self.grid;
        let a = liouville_q(self.gamma) - self.gamma;
        let radial = brownian_rows(g, 0.0, rng);
        let mut x = self.angular.sample_values(rng);
        let nth = g.n_theta();
        for (r, row) in x.chunks_mut(nth).enumerate() {
            let m = radial[r] + a * g.t_of_row(r) - self.c;
            row.iter_mut().for_each(|v| *v += m);
        }
        x
    }

    /// One rejection attempt; `None` when the area falls outside the window.
    pub fn attempt(&self, rng: &mut SeedRng) -> Result<Option<SphereSample>> {
        let x = self.draw_x(rng);
        let (field, measure) = assemble(self.gamma, self.grid.clone(), x)?;
        let log_total = measure.log_total();
        if log_total.abs() > self.gamma * self.delta {
            return Ok(None);
        }
        let nth = self.grid.n_theta();
        let row_means: Vec<f64> = field
            .values()
            .chunks(nth)
            .enumerate()
            .map(|(r, c)| c.iter().sum::<f64>() / nth as f64 + liouville_q(self.gamma) * self.grid.t_of_row(r))
            .collect();
        let top = argmax(&row_means);
        let grid = recentered(&self.grid, top)?;
        let s = self.grid.t_of_row(top);
        // h'(z) = h(z e^{s}) + Q s keeps X unchanged
        let q = liouville_q(self.gamma);
        let values = field.values().iter().map(|v| v + q * s).collect();
        let geom = Geometry::Cylinder(grid);
        let field = Field::new(geom.clone(), values, Pinning::ModuloConstant)?;
        let measure = measure.with_geometry(geom).normalize()?;
        Ok(Some(SphereSample {
            field,
            measure,
            marked_points: Vec::new(),
            embedding: Embedding::Maxima,
            log_total,
            weight: 1.0,
            acceptance: AcceptanceStats::default(),
        }))
    }

    /// Attempts until acceptance or until the attempt budget runs out.
    pub fn sample(&self, rng: &mut SeedRng) -> Result<SphereSample> {
        let mut attempts = 0;
        while attempts < self.max_attempts {
            attempts += 1;
            if let Some(mut s) = self.attempt(rng)? {
                s.acceptance = AcceptanceStats { attempts, accepted: 1 };
                return Ok(s);
            }
        }
        Err(Error::Budget(BudgetReport {
            attempts,
            accepted: 0,
            acceptance_rate: 0.0,
            floor: self.acceptance_floor,
        }))
    }

    /// Acceptance counts over a fixed number of attempts (no sample is kept).
    pub fn acceptance_trial(&self, attempts: u64, root: u64) -> Result<AcceptanceStats> {
        let accepted: Result<Vec<bool>> = (0..attempts)
            .into_par_iter()
            .map(|i| Ok(self.attempt(&mut rng::stream(root, i))?.is_some()))
            .collect();
        Ok(AcceptanceStats { attempts, accepted: accepted?.iter().filter(|a| **a).count() as u64 })
    }

    /// Two-point sphere followed by a third point from the quantum area and the
    /// rotation-dilation sending it to `1`.
    pub fn three_point(&self, rng: &mut SeedRng) -> Result<SphereSample> {
        let two = self.sample(rng)?;
        mobius_normalize(self.gamma, two, rng)
    }

    /// `n` three-point spheres in parallel, reduced to probe observables.
    pub fn three_point_ensemble(&self, n: usize, root: u64, probes: &[Probe], label: &str) -> Result<Ensemble> {
        let results: Result<Vec<(EnsembleRecord, AcceptanceStats, f64)>> = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let s = self.three_point(&mut rng::stream(root, i))?;
                // the window moves with each sample, so a probe may miss it entirely
                let observables: Result<Vec<f64>> =
                    probes.iter().map(|p| s.measure.fraction_of(p.cells(s.measure.geometry()))).collect();
                let observables = observables?;
                let edge = edge_fraction(&s.measure);
                let rec = EnsembleRecord { seed: i, weight: 1.0, field_shift: 0.0, log_total: s.log_total, observables };
                Ok((rec, s.acceptance, edge))
            })
            .collect();
        let mut ens = Ensemble::new(label, root, probes.iter().map(|p| p.name.clone()).collect());
        let mut acc = AcceptanceStats::default();
        let mut edge: f64 = 0.0;
        for (rec, a, e) in results? {
            ens.records.push(rec);
            acc.merge(a);
            edge = edge.max(e);
        }
        ens.acceptance = Some(acc);
        ens.diagnostics.insert("gamma".into(), self.gamma);
        ens.diagnostics.insert("C".into(), self.c);
        ens.diagnostics.insert("delta".into(), self.delta);
        ens.diagnostics.insert("acceptance_rate".into(), acc.rate());
        ens.diagnostics.insert("max_far_end_mass".into(), edge);
        ens.finish()?;
        Ok(ens)
    }
}

/// Normalized mass in the first and last rows of a cylinder measure.
fn edge_fraction(m: &Measure) -> f64 {
    let g = m.geometry().as_cylinder().expect("cylinder measure");
    let nth = g.n_theta();
    let last = g.len() - nth;
    let masses = m.masses();
    let total: f64 = masses.iter().sum();
    (masses[..nth].iter().sum::<f64>() + masses[last..].iter().sum::<f64>()) / total
}

pub fn sample_limiting_sphere(gamma: f64, c: f64, delta: f64, grid: &CylinderGrid, seed: u64) -> Result<SphereSample> {
    LimitingSphere::new(gamma, c, delta, grid)?.sample(&mut rng::stream(seed, 0))
}

/// Cell drawn proportionally to mass, jittered uniformly inside it; returns the
/// cell index and its `(t, θ)`.
pub fn sample_quantum_point<R: Rng + ?Sized>(measure: &Measure, rng: &mut R) -> Result<(usize, MarkedPoint)> {
    let g = measure
        .geometry()
        .as_cylinder()
        .ok_or_else(|| Error::Geometry("quantum points are sampled on cylinder grids".into()))?;
    if measure.relative_masses().iter().all(|m| *m == 0.0) {
        return Err(Error::Degenerate("cannot sample a point from the zero measure".into()));
    }
    let k = stats::categorical(measure.relative_masses(), rng)?;
    let (t, th) = g.coords(k);
    let u: f64 = rng.random::<f64>() - 0.5;
    let v: f64 = rng.random::<f64>() - 0.5;
    Ok((k, MarkedPoint { t: t + u * g.dt(), theta: (th + v * g.dtheta()).rem_euclid(2.0 * std::f64::consts::PI) }))
}

/// Third marked point from the quantum area, then `z ↦ z/w` for the center `w`
/// of its cell: a row translation and a column roll of the cylinder.
pub fn mobius_normalize(gamma: f64, two: SphereSample, rng: &mut SeedRng) -> Result<SphereSample> {
    let (k, p) = sample_quantum_point(&two.measure, rng)?;
    let g = two.grid().clone();
    let nth = g.n_theta();
    let (row, col) = (k / nth, k % nth);
    let (tw, thw) = g.coords(k);
    let grid = recentered(&g, row)?;
    let q = liouville_q(gamma);
    let roll = |src: &[f64], add: f64| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for (r, chunk) in src.chunks(nth).enumerate() {
            for j in 0..nth {
                out[r * nth + j] = chunk[(j + col) % nth] + add;
            }
        }
        out
    };
    let geom = Geometry::Cylinder(grid);
    let field = Field::new(geom.clone(), roll(two.field.values(), q * tw + two.field.constant()), Pinning::ModuloConstant)?;
    let measure = Measure::from_parts(
        geom,
        roll(two.measure.relative_masses(), 0.0),
        two.measure.log_scale(),
        two.measure.is_normalized(),
    )?;
    let pi = std::f64::consts::PI;
    let d_theta = (p.theta - thw + pi).rem_euclid(2.0 * pi) - pi;
    let third = MarkedPoint { t: p.t - tw, theta: d_theta };
    Ok(SphereSample {
        field,
        measure,
        marked_points: vec![third],
        embedding: Embedding::Mobius01Inf,
        ..two
    })
}

/// Limiting-procedure three-point ensemble on the default half-cylinder.
pub fn dms_three_point_sample(
    gamma: f64,
    c: f64,
    delta: f64,
    grid: &CylinderGrid,
    n: usize,
    root_seed: u64,
    probes: &[Probe],
) -> Result<Ensemble> {
    LimitingSphere::new(gamma, c, delta, grid)?.three_point_ensemble(n, root_seed, probes, "dms")
}

/// Two-point sphere from the Bessel construction with importance weight
/// (`γ ∈ (√2, 2)`).
///
/// The maximum `M` of the radial path has density `∝ e^{-2(Q-γ)M}` under the
/// excursion measure and the area is `e^{γM} μ₀`, with `μ₀` the area of the path
/// shifted to maximum 0. Restricting the area to `[e^{-γδ}, e^{γδ}]` leaves `M`
/// truncated-exponential on an interval of fixed length and gives the rest of the
/// surface the weight `μ₀^{2(Q-γ)/γ}`. `grid` must have a row centered at `t = 0`.
pub fn sample_bessel_sphere(gamma: f64, delta: f64, grid: &CylinderGrid, rng: &mut SeedRng) -> Result<SphereSample> {
    let path = sample_bessel_radial(gamma, grid, rng)?;
    let a = liouville_q(gamma) - gamma;
    let nth = grid.n_theta();
    let mut x = AngularSampler::new(grid, AngularBoundary::Stationary).sample_values(rng);
    for (r, row) in x.chunks_mut(nth).enumerate() {
        row.iter_mut().for_each(|v| *v += path.x[r]);
    }
    let (_, m0) = assemble(gamma, grid.clone(), x.clone())?;
    let l = m0.log_total() / gamma;
    // M on [-δ - l, δ - l] with density ∝ e^{-2aM}
    let u: f64 = rng.random();
    let lam = 2.0 * a;
    let width = 2.0 * delta;
    let m = -delta - l - (1.0 - u * (-(-lam * width).exp_m1())).ln() / lam;
    x.iter_mut().for_each(|v| *v += m);
    let (field, measure) = assemble(gamma, grid.clone(), x)?;
    let log_total = measure.log_total();
    Ok(SphereSample {
        field,
        measure: measure.normalize()?,
        marked_points: Vec::new(),
        embedding: Embedding::Maxima,
        log_total,
        weight: (2.0 * a * l).exp(),
        acceptance: AcceptanceStats { attempts: 1, accepted: 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::gmc_measure;
    use crate::chaos::SingularPart;

    #[test]
    fn accepted_samples_respect_window_and_embedding() {
        let gamma = 2f64.sqrt();
        let grid = LimitingSphere::default_grid(gamma, 1.0, 32).unwrap();
        let s = LimitingSphere::new(gamma, 1.0, 0.3, &grid).unwrap();
        for i in 0..5 {
            let x = s.sample(&mut rng::stream(11, i)).unwrap();
            assert!(x.log_total.abs() <= gamma * 0.3);
            assert!((x.measure.total() - 1.0).abs() < 1e-12);
            let p = x.radial_path(gamma);
            assert!(p.t[p.maximum_location].abs() < 1e-9);
            // the stored field reproduces the stored measure
            let m = gmc_measure(&x.field, gamma, &SingularPart::none()).unwrap();
            assert!((m.log_total() - x.log_total).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_error_when_window_unreachable() {
        let gamma = 2f64.sqrt();
        let grid = LimitingSphere::default_grid(gamma, 1.0, 16).unwrap();
        let mut s = LimitingSphere::new(gamma, 40.0, 1e-6, &grid).unwrap();
        s.max_attempts = 20;
        match s.sample(&mut rng::stream(1, 0)) {
            Err(Error::Budget(r)) => assert_eq!(r.attempts, 20),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn third_point_lands_in_the_cell_of_one() {
        let gamma = 2f64.sqrt();
        let grid = LimitingSphere::default_grid(gamma, 1.0, 32).unwrap();
        let s = LimitingSphere::new(gamma, 1.0, 0.3, &grid).unwrap();
        let mut rng = rng::stream(4, 0);
        let two = s.sample(&mut rng).unwrap();
        let mut before: Vec<f64> = two.measure.masses();
        let three = mobius_normalize(gamma, two, &mut rng).unwrap();
        let g = three.grid();
        let p = three.marked_points[0];
        let k = g.row_of(p.t).unwrap() * g.n_theta() + g.col_of(p.theta);
        assert_eq!(g.center(k), num_complex::Complex64::new(1.0, 0.0));
        assert!(three.measure.cell_mass(k) > 0.0);
        let mut after = three.measure.masses();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before, after);
        let m = gmc_measure(&three.field, gamma, &SingularPart::none()).unwrap();
        assert!((m.log_total() - three.log_total).abs() < 1e-9);
    }

    #[test]
    fn quantum_point_on_point_mass() {
        let g = CylinderGrid::aligned(2, 2, 8).unwrap();
        let mut masses = vec![0.0; g.len()];
        masses[13] = 2.0;
        let m = Measure::from_masses(Geometry::Cylinder(g.clone()), masses).unwrap();
        let mut rng = rng::stream(2, 0);
        for _ in 0..100 {
            let (k, p) = sample_quantum_point(&m, &mut rng).unwrap();
            assert_eq!(k, 13);
            assert_eq!(g.row_of(p.t).unwrap() * 8 + g.col_of(p.theta), 13);
        }
        let z = Measure::zero(Geometry::Cylinder(g));
        assert!(matches!(sample_quantum_point(&z, &mut rng), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bessel_sphere_area_in_window() {
        let gamma = 1.7;
        let grid = CylinderGrid::aligned(300, 300, 16).unwrap();
        let x = sample_bessel_sphere(gamma, 0.3, &grid, &mut rng::stream(3, 0)).unwrap();
        assert!(x.log_total.abs() <= gamma * 0.3 + 1e-9);
        assert!(x.weight > 0.0 && x.weight.is_finite());
    }
}
