//! Monte Carlo calibration of the lattice field and chaos against closed forms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::chaos::{expected_disk_mass, gmc_measure, SingularPart};
use crate::error::{Error, Result};
use crate::field_core::{circle_weights, disk_green, DirichletSampler, Geometry, PlanarGrid};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCovariance {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub separation_cells: f64,
    pub empirical: f64,
    pub standard_error: f64,
    pub lattice: f64,
    pub continuum: f64,
}

impl PairCovariance {
    pub fn error(&self) -> f64 {
        (self.empirical - self.continuum).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCalibration {
    pub resolution: usize,
    pub draws: usize,
    pub pairs: Vec<PairCovariance>,
}

impl CovarianceCalibration {
    pub fn max_error(&self) -> f64 {
        self.pairs.iter().map(PairCovariance::error).fold(0.0, f64::max)
    }
}

/// Ten cell-center pairs spread over the unit disk, at least four cells apart.
pub fn probe_pairs(grid: &PlanarGrid) -> Vec<(usize, usize)> {
    (0..10)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / 10.0;
            let r = 0.15 + 0.07 * k as f64;
            let x = Complex64::from_polar(r, th);
            let y = Complex64::from_polar(0.35, th + 0.4 + 0.1 * k as f64);
            (grid.cell_of(x).expect("inside the disk"), grid.cell_of(y).expect("inside the disk"))
        })
        .collect()
}

/// Empirical covariance of the zero-boundary field on the unit disk at
/// [`probe_pairs`], with the exact lattice and continuum values alongside.
pub fn covariance_calibration(resolution: usize, draws: usize, seed: u64) -> Result<CovarianceCalibration> {
    if draws < 2 {
        return Err(Error::Parameter("need at least two draws".into()));
    }
    let grid = PlanarGrid::new(resolution, 1.0)?;
    let sampler = DirichletSampler::new(&grid)?;
    let pairs = probe_pairs(&grid);
    let samples: Vec<Vec<(f64, f64)>> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let f = sampler.sample(&mut rng::stream(seed, i));
            pairs.iter().map(|&(a, b)| (f.value(a), f.value(b))).collect()
        })
        .collect();
    let n = draws as f64;
    let out = pairs
        .iter()
        .enumerate()
        .map(|(p, &(a, b))| {
            let (mut sx, mut sy) = (0.0, 0.0);
            for s in &samples {
                sx += s[p].0;
                sy += s[p].1;
            }
            let (mx, my) = (sx / n, sy / n);
            let prods: Vec<f64> = samples.iter().map(|s| (s[p].0 - mx) * (s[p].1 - my)).collect();
            let cov = prods.iter().sum::<f64>() / (n - 1.0);
            let var = prods.iter().map(|v| (v - cov).powi(2)).sum::<f64>() / (n - 1.0);
            let (cx, cy) = (grid.center(a), grid.center(b));
            PairCovariance {
                x: [cx.re, cx.im],
                y: [cy.re, cy.im],
                separation_cells: (cx - cy).norm() / grid.cell_size(),
                empirical: cov,
                standard_error: (var / n).sqrt(),
                lattice: sampler.covariance(a, b),
                continuum: disk_green(1.0, cx, cy),
            }
        })
        .collect();
    Ok(CovarianceCalibration { resolution, draws, pairs: out })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleVariance {
    pub epsilon: f64,
    pub resolution: usize,
    pub draws: usize,
    pub empirical: f64,
    pub lattice: f64,
    pub expected: f64,
}

impl CircleVariance {
    pub fn relative_error(&self) -> f64 {
        (self.empirical / self.expected - 1.0).abs()
    }
}

/// Variance of the unit-circle average of the zero-boundary field on `ε⁻¹𝔻`.
pub fn circle_variance_calibration(epsilon: f64, resolution: usize, draws: usize, seed: u64) -> Result<CircleVariance> {
    if !(epsilon > 0.0 && epsilon < 1.0) || draws < 2 {
        return Err(Error::Parameter("need epsilon in (0, 1) and at least two draws".into()));
    }
    let grid = PlanarGrid::new(resolution, 1.0 / epsilon)?;
    let sampler = DirichletSampler::new(&grid)?;
    let w = circle_weights(&Geometry::Planar(grid), Complex64::new(0.0, 0.0), 1.0)?;
    let a: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let f = sampler.sample(&mut rng::stream(seed, i));
            w.iter().map(|&(k, c)| c * f.value(k)).sum()
        })
        .collect();
    let n = draws as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(CircleVariance {
        epsilon,
        resolution,
        draws,
        empirical: var,
        lattice: sampler.functional_variance(&w),
        expected: -epsilon.ln(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub gamma: f64,
    pub radius: f64,
    pub draws: usize,
    pub mean: f64,
    pub standard_error: f64,
    pub expected: f64,
}

impl ExpectationCheck {
    pub fn z_score(&self) -> f64 {
        (self.mean - self.expected) / self.standard_error
    }
}

/// Mean chaos mass of `r𝔻` for the zero-boundary field on the unit disk.
pub fn gmc_expectation_check(gamma: f64, radius: f64, resolution: usize, draws: usize, seed: u64) -> Result<ExpectationCheck> {
    if !(radius > 0.0 && radius <= 1.0) || draws < 2 {
        return Err(Error::Parameter("need radius in (0, 1] and at least two draws".into()));
    }
    let grid = PlanarGrid::new(resolution, 1.0)?;
    let sampler = DirichletSampler::new(&grid)?;
    let cells: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_interior(k) && grid.center(k).norm() < radius).collect();
    let masses: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let f = sampler.sample(&mut rng::stream(seed, i));
            gmc_measure(&f, gamma, &SingularPart::none()).map(|m| m.mass_of(cells.iter().copied()))
        })
        .collect::<Result<_>>()?;
    let n = draws as f64;
    let mean = masses.iter().sum::<f64>() / n;
    let var = masses.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(ExpectationCheck {
        gamma,
        radius,
        draws,
        mean,
        standard_error: (var / n).sqrt(),
        expected: expected_disk_mass(gamma, radius),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_pairs_are_separated() {
        let grid = PlanarGrid::new(128, 1.0).unwrap();
        for (a, b) in probe_pairs(&grid) {
            assert!((grid.center(a) - grid.center(b)).norm() / grid.cell_size() >= 4.0);
        }
    }

    #[test]
    fn small_runs_are_deterministic() {
        let a = covariance_calibration(32, 20, 4).unwrap();
        assert_eq!(a, covariance_calibration(32, 20, 4).unwrap());
        let c = circle_variance_calibration(0.25, 32, 50, 1).unwrap();
        assert!(c.lattice > 0.0 && c.empirical > 0.0);
    }
}
