//! Fields on the cylinder `ℝ × [0, 2π)`.
//!
//! The whole-plane GFF pulled back by `z = exp(t + iθ)` splits into its circle
//! means, a two-sided Brownian motion in `t`, and an independent lateral part
//! with zero circle means. The lateral part is a sum of Fourier modes
//! `a_k(t) cos kθ + b_k(t) sin kθ`, `1 ≤ k ≤ n_θ/2`, whose coefficients are
//! stationary Ornstein–Uhlenbeck processes with covariance `e^{-k|t-s|}/k`
//! (equivalently `e^{-|k||t-s|}/(2|k|)` per complex mode). At the Nyquist
//! frequency only the cosine survives on the grid. A Dirichlet condition at
//! `t = t0` turns each coefficient into the OU process killed at `t0`, which has
//! the same one-step transition and a smaller initial variance.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use num_complex::Complex64;
use std::sync::Arc;

use super::field::{Field, Pinning};
use super::grid::{CylinderGrid, Geometry};
use crate::error::{Error, Result};
use crate::rng;

/// Number of angular modes carried by a grid with `n_theta` columns.
pub fn angular_mode_count(n_theta: usize) -> usize {
    n_theta / 2
}

/// Pointwise variance of the lateral lattice field, `Σ_{k=1}^{K} 1/k`.
pub fn angular_variance(n_theta: usize) -> f64 {
    (1..=angular_mode_count(n_theta)).map(|k| 1.0 / k as f64).sum()
}

/// Lattice covariance of the lateral field between points separated by `(dt, dθ)`.
pub fn angular_covariance(n_theta: usize, dt: f64, dtheta: f64) -> f64 {
    let kmax = angular_mode_count(n_theta);
    (1..=kmax)
        .map(|k| {
            let kf = k as f64;
            (-kf * dt.abs()).exp() * (kf * dtheta).cos() / kf
        })
        .sum()
}

/// Where the lateral field is pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularBoundary {
    Stationary,
    /// Zero for `t ≥ t0`; the killed OU law below.
    DirichletAbove(f64),
}

/// Sampler for the lateral (zero circle mean) part on one grid.
#[derive(Clone)]
pub struct AngularSampler {
    grid: CylinderGrid,
    boundary: AngularBoundary,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for AngularSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularSampler").field("grid", &self.grid).field("boundary", &self.boundary).finish()
    }
}

impl AngularSampler {
    pub fn new(grid: &CylinderGrid, boundary: AngularBoundary) -> Self {
        let fft = FftPlanner::new().plan_fft_inverse(grid.n_theta());
        AngularSampler { grid: grid.clone(), boundary, fft }
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    /// Row-major lateral values; every row sums to zero up to round-off.
    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let g = &self.grid;
        let (nt, nth) = (g.n_t(), g.n_theta());
        let kmax = angular_mode_count(nth);
        let dt = g.dt();
        let mut out = vec![0.0; nt * nth];
        // coefficients (a_k, b_k), k = 1..=kmax, stored at index k-1
        let mut a = vec![0.0; kmax];
        let mut b = vec![0.0; kmax];
        let rho: Vec<f64> = (1..=kmax).map(|k| (-(k as f64) * dt).exp()).collect();
        let innov: Vec<f64> = (1..=kmax).map(|k| (-(-2.0 * k as f64 * dt).exp_m1() / k as f64).sqrt()).collect();
        let mut spec = vec![Complex64::new(0.0, 0.0); nth];
        let mut started = false;
        for row in (0..nt).rev() {
            let t = g.t_of_row(row);
            if let AngularBoundary::DirichletAbove(t0) = self.boundary {
                if t >= t0 {
                    continue;
                }
            }
            for k in 1..=kmax {
                let i = k - 1;
                let za: f64 = rng.sample(StandardNormal);
                let zb: f64 = if k < kmax || nth % 2 == 1 { rng.sample(StandardNormal) } else { 0.0 };
                if started {
                    a[i] = rho[i] * a[i] + innov[i] * za;
                    b[i] = rho[i] * b[i] + innov[i] * zb;
                } else {
                    let var = match self.boundary {
                        AngularBoundary::Stationary => 1.0 / k as f64,
                        AngularBoundary::DirichletAbove(t0) => -(-2.0 * k as f64 * (t0 - t)).exp_m1() / k as f64,
                    };
                    a[i] = var.sqrt() * za;
                    b[i] = var.sqrt() * zb;
                }
            }
            started = true;
            spec.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for k in 1..=kmax {
                let c = Complex64::new(a[k - 1], -b[k - 1]) * 0.5;
                if 2 * k == nth {
                    spec[k] = Complex64::new(a[k - 1], 0.0);
                } else {
                    spec[k] = c;
                    spec[nth - k] = c.conj();
                }
            }
            self.fft.process(&mut spec);
            for (j, c) in spec.iter().enumerate() {
                out[row * nth + j] = c.re;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        let values = self.sample_values(rng);
        Field::from_parts(Geometry::Cylinder(self.grid.clone()), values, 0.0, Pinning::CircleMeanZero)
    }
}

pub fn sample_angular_gff(grid: &CylinderGrid, seed: u64) -> Field {
    AngularSampler::new(grid, AngularBoundary::Stationary).sample(&mut rng::stream(seed, 0))
}

/// Brownian motion sampled at the row centers, started from 0 at `t = origin`
/// and run independently in both directions.
pub fn brownian_rows<R: Rng + ?Sized>(grid: &CylinderGrid, origin: f64, rng: &mut R) -> Vec<f64> {
    let nt = grid.n_t();
    let mut out = vec![0.0; nt];
    let split = (0..nt).find(|&r| grid.t_of_row(r) >= origin).unwrap_or(nt);
    let (mut t, mut x) = (origin, 0.0);
    for (r, o) in out.iter_mut().enumerate().skip(split) {
        let tr = grid.t_of_row(r);
        x += (tr - t).sqrt() * rng.sample::<f64, _>(StandardNormal);
        t = tr;
        *o = x;
    }
    let (mut t, mut x) = (origin, 0.0);
    for r in (0..split).rev() {
        let tr = grid.t_of_row(r);
        x += (t - tr).sqrt() * rng.sample::<f64, _>(StandardNormal);
        t = tr;
        out[r] = x;
    }
    out
}

/// Whole-plane GFF on the cylinder with unit-circle mean zero.
#[derive(Debug, Clone)]
pub struct WholePlaneCylinderSampler {
    angular: AngularSampler,
}

impl WholePlaneCylinderSampler {
    pub fn new(grid: &CylinderGrid) -> Self {
        WholePlaneCylinderSampler { angular: AngularSampler::new(grid, AngularBoundary::Stationary) }
    }

    pub fn grid(&self) -> &CylinderGrid {
        self.angular.grid()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        let g = self.angular.grid();
        let radial = brownian_rows(g, 0.0, rng);
        let mut values = self.angular.sample_values(rng);
        add_rows(&mut values, &radial, g.n_theta());
        Field::from_parts(Geometry::Cylinder(g.clone()), values, 0.0, Pinning::CircleMeanZero)
    }
}

pub(crate) fn add_rows(values: &mut [f64], radial: &[f64], n_theta: usize) {
    for (row, chunk) in values.chunks_mut(n_theta).enumerate() {
        chunk.iter_mut().for_each(|v| *v += radial[row]);
    }
}

/// Circle-mean / lateral decomposition of a cylinder field.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialAngularSplit {
    /// Circle mean per row, including the field's zero mode.
    pub radial: Vec<f64>,
    pub angular: Field,
}

impl RadialAngularSplit {
    pub fn reconstruct(&self) -> Field {
        let g = self.angular.geometry().as_cylinder().expect("cylinder split").clone();
        let mut values = self.angular.values().to_vec();
        add_rows(&mut values, &self.radial, g.n_theta());
        Field::from_parts(Geometry::Cylinder(g), values, 0.0, Pinning::ModuloConstant)
    }
}

pub fn radial_angular_split(field: &Field) -> Result<RadialAngularSplit> {
    let g = field
        .geometry()
        .as_cylinder()
        .ok_or_else(|| Error::Geometry("radial/angular split needs a cylinder field".into()))?;
    let nth = g.n_theta();
    let flat = field.flattened();
    let radial: Vec<f64> = flat.chunks(nth).map(|r| r.iter().sum::<f64>() / nth as f64).collect();
    let angular: Vec<f64> = flat.iter().enumerate().map(|(k, v)| v - radial[k / nth]).collect();
    Ok(RadialAngularSplit {
        radial,
        angular: Field::from_parts(field.geometry().clone(), angular, 0.0, Pinning::CircleMeanZero),
    })
}
