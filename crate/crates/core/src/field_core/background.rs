//! Background (pinning) measures and the Green's functions they induce.
//!
//! For a unit-mass density `ρ` the pinned whole-plane field has covariance
//!
//! ```text
//! G_ρ(z, w) = log 1/|z-w| - m_ρ(z) - m_ρ(w) + θ_ρ,
//! m_ρ(z)    = ∫ log 1/|z-u| ρ(u) du,
//! θ_ρ       = -∫∫ ρ(u) log|u-v| ρ(v) du dv.
//! ```
//!
//! The spherical density `ĝ(z) = π⁻¹(1+|z|²)⁻²` has `m_ĝ(z) = -½ log(1+|z|²)` and
//! `θ_ĝ = -½`; the uniform measure on the unit circle has `m_𝔠(z) = -log(|z| ∨ 1)`
//! and `θ_𝔠 = 0`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::circle::circle_average;
use super::field::Field;
use super::grid::Geometry;
use crate::error::{Error, Result};

/// Fraction of the background mass a grid must capture before its average is trusted.
pub const MIN_CAPTURED_MASS: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    Spherical,
    UnitCircle,
    Custom,
}

type Density = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

/// Quadrature description of a custom density supported in `extent·𝔻`.
#[derive(Clone)]
struct CustomDensity {
    density: Density,
    nodes: Vec<(Complex64, f64)>,
    /// Radius of the disk with the same area as each quadrature cell.
    cell_radius: Vec<f64>,
}

#[derive(Clone)]
pub struct BackgroundMeasure {
    kind: BackgroundKind,
    theta: f64,
    custom: Option<CustomDensity>,
}

impl fmt::Debug for BackgroundMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackgroundMeasure").field("kind", &self.kind).field("theta", &self.theta).finish()
    }
}

/// `ĝ(z) = π⁻¹(1+|z|²)⁻²`.
pub fn spherical_density(z: Complex64) -> f64 {
    let s = 1.0 + z.norm_sqr();
    1.0 / (PI * s * s)
}

impl BackgroundMeasure {
    pub fn spherical() -> Self {
        BackgroundMeasure { kind: BackgroundKind::Spherical, theta: -0.5, custom: None }
    }

    pub fn unit_circle() -> Self {
        BackgroundMeasure { kind: BackgroundKind::UnitCircle, theta: 0.0, custom: None }
    }

    pub fn from_kind(kind: BackgroundKind) -> Result<Self> {
        match kind {
            BackgroundKind::Spherical => Ok(Self::spherical()),
            BackgroundKind::UnitCircle => Ok(Self::unit_circle()),
            BackgroundKind::Custom => Err(Error::Config("custom background needs a density".into())),
        }
    }

    /// Custom density supported in `extent·𝔻`, integrated on a polar midpoint
    /// rule with `radial_nodes × 4·radial_nodes` cells. The density is
    /// renormalized to unit mass on the quadrature.
    pub fn custom<F>(density: F, extent: f64, radial_nodes: usize) -> Result<Self>
    where
        F: Fn(Complex64) -> f64 + Send + Sync + 'static,
    {
        if !(extent > 0.0) || radial_nodes < 4 {
            return Err(Error::Config("custom background needs extent > 0 and ≥ 4 radial nodes".into()));
        }
        let n_r = radial_nodes;
        let n_a = 4 * radial_nodes;
        let dr = extent / n_r as f64;
        let da = 2.0 * PI / n_a as f64;
        let mut nodes = Vec::with_capacity(n_r * n_a);
        let mut areas = Vec::with_capacity(n_r * n_a);
        for i in 0..n_r {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..n_a {
                let z = Complex64::from_polar(r, (j as f64 + 0.5) * da);
                let area = r * dr * da;
                let w = density(z) * area;
                if w < 0.0 || !w.is_finite() {
                    return Err(Error::Config(format!("density invalid at {z}")));
                }
                nodes.push((z, w));
                areas.push(area);
            }
        }
        let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
        if !(mass > 0.0) {
            return Err(Error::Config("custom density has zero mass".into()));
        }
        for (_, w) in nodes.iter_mut() {
            *w /= mass;
        }
        let cell_radius: Vec<f64> = areas.iter().map(|a| (a / PI).sqrt()).collect();
        let mut theta = 0.0;
        for (i, (zi, wi)) in nodes.iter().enumerate() {
            let mut acc = 0.0;
            for (j, (zj, wj)) in nodes.iter().enumerate() {
                // mean of log|u - v| over a disk of radius a is log(a) - 1/4
                let l = if i == j { cell_radius[i].ln() - 0.25 } else { (zi - zj).norm().ln() };
                acc += wj * l;
            }
            theta -= wi * acc;
        }
        Ok(BackgroundMeasure {
            kind: BackgroundKind::Custom,
            theta,
            custom: Some(CustomDensity { density: Arc::new(density), nodes, cell_radius }),
        })
    }

    pub fn kind(&self) -> BackgroundKind {
        self.kind
    }

    /// The constant `θ_ρ`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Density evaluator; the circle measure is singular and reports 0 off the circle.
    pub fn density(&self, z: Complex64) -> f64 {
        match self.kind {
            BackgroundKind::Spherical => spherical_density(z),
            BackgroundKind::UnitCircle => 0.0,
            BackgroundKind::Custom => (self.custom.as_ref().expect("custom density").density)(z),
        }
    }

    /// `m_ρ(log 1/|z - ·|)`.
    pub fn log_potential(&self, z: Complex64) -> f64 {
        match self.kind {
            BackgroundKind::Spherical => -0.5 * (1.0 + z.norm_sqr()).ln(),
            BackgroundKind::UnitCircle => -z.norm().max(1.0).ln(),
            BackgroundKind::Custom => {
                let c = self.custom.as_ref().expect("custom density");
                c.nodes
                    .iter()
                    .zip(&c.cell_radius)
                    .map(|((u, w), a)| {
                        let d = (z - u).norm();
                        // mean of log|z - u| over a disk of radius a centered near z
                        let l = if d < *a { a.ln() - 0.5 } else { d.ln() };
                        -w * l
                    })
                    .sum()
            }
        }
    }

    /// Green's function `G_ρ(x, y)` for finite `x ≠ y`.
    pub fn green(&self, x: Complex64, y: Complex64) -> Result<f64> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Parameter("Green's function takes finite points".into()));
        }
        let d = (x - y).norm();
        if d == 0.0 {
            return Err(Error::Singularity(format!("G_ρ evaluated on the diagonal at {x}")));
        }
        Ok(-d.ln() - (self.log_potential(x) + self.log_potential(y)) + self.theta)
    }

    /// `(h, ρ)` for a field on the grid.
    pub fn average(&self, field: &Field) -> Result<f64> {
        match self.kind {
            BackgroundKind::UnitCircle => circle_average(field, Complex64::new(0.0, 0.0), 1.0),
            _ => {
                let geom = field.geometry();
                let (num, captured) = self.weighted_sum(geom, |k| field.value(k));
                if captured < MIN_CAPTURED_MASS {
                    return Err(Error::Config(format!(
                        "grid captures only {captured:.3} of the background mass"
                    )));
                }
                Ok(num / captured)
            }
        }
    }

    /// `(Σ ρ_k f(k), Σ ρ_k)` with cell weights `ρ_k` in plane area.
    fn weighted_sum(&self, geom: &Geometry, f: impl Fn(usize) -> f64) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..geom.len() {
            if !geom.is_active(k) {
                continue;
            }
            let z = geom.center(k);
            let jac = match geom {
                Geometry::Planar(_) => 1.0,
                Geometry::Cylinder(_) => z.norm_sqr(),
            };
            let w = self.density(z) * jac * geom.cell_area();
            num += w * f(k);
            den += w;
        }
        (num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spherical_green_at_antipodes() {
        // |x - y| = 2 and m_ĝ(±1) = -½ log 2, so G = -log 2 + log 2 - ½.
        let g = BackgroundMeasure::spherical().green(c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        assert!((g + 0.5).abs() < 1e-15);
    }

    #[test]
    fn quoted_spherical_form_differs_by_constant() {
        // log 1/|x-y| - ¼(log ĝ(x) + log ĝ(y)) - ½ equals our G_ĝ + ½ log π.
        let rho = BackgroundMeasure::spherical();
        for (x, y) in [(c(1.0, 0.0), c(-1.0, 0.0)), (c(0.3, 2.0), c(-4.0, 0.1)), (c(0.0, 0.0), c(5.0, 5.0))] {
            let quoted = -(x - y).norm().ln()
                - 0.25 * (spherical_density(x).ln() + spherical_density(y).ln())
                - 0.5;
            let ours = rho.green(x, y).unwrap();
            assert!((quoted - ours - 0.5 * PI.ln()).abs() < 1e-12);
        }
        let quoted_antipodes = 0.5 * PI.ln() - 0.5;
        assert!((quoted_antipodes - 0.072364942924700).abs() < 1e-12);
    }

    #[test]
    fn circle_green_closed_form() {
        let g = BackgroundMeasure::unit_circle().green(c(2.0, 0.0), c(3.0, 0.0)).unwrap();
        assert!((g - 6f64.ln()).abs() < 1e-14);
        let rho = BackgroundMeasure::unit_circle();
        assert_eq!(rho.log_potential(c(2.0, 0.0)), -LN_2);
        assert_eq!(rho.log_potential(c(0.5, 0.1)), 0.0);
    }

    #[test]
    fn diagonal_is_singular() {
        let r = BackgroundMeasure::spherical().green(c(0.2, 0.2), c(0.2, 0.2));
        assert!(matches!(r, Err(Error::Singularity(_))));
    }

    #[test]
    fn green_is_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for rho in [BackgroundMeasure::spherical(), BackgroundMeasure::unit_circle()] {
            for _ in 0..100 {
                let x = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                let y = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                assert_eq!(rho.green(x, y).unwrap(), rho.green(y, x).unwrap());
            }
        }
    }

    /// Polar quadrature of `∫ G_ĝ(x, w) ĝ(w) dw` with `r = tan(φ)` to map the plane to a
    /// bounded interval, plus the exact angular average of the log kernel.
    #[test]
    fn spherical_green_integrates_to_zero_against_rho() {
        let rho = BackgroundMeasure::spherical();
        for x in [c(0.0, 0.0), c(0.7, -0.2), c(3.0, 1.0)] {
            let n = 4000;
            let mut acc = 0.0;
            let xr = x.norm();
            for i in 0..n {
                let phi = (i as f64 + 0.5) * (0.5 * PI) / n as f64;
                let r = phi.tan();
                let dr = (0.5 * PI / n as f64) / phi.cos().powi(2);
                // angular mean of -log|x - r e^{iθ}| is -log max(|x|, r)
                let ang = -xr.max(r).ln();
                let g = ang - rho.log_potential(x) - rho.log_potential(c(r, 0.0)) + rho.theta();
                acc += g * spherical_density(c(r, 0.0)) * 2.0 * PI * r * dr;
            }
            assert!(acc.abs() < 1e-6, "x = {x}: {acc}");
        }
    }

    #[test]
    fn circle_green_integrates_to_zero_against_rho() {
        let rho = BackgroundMeasure::unit_circle();
        for x in [c(0.0, 0.3), c(0.7, -0.2), c(3.0, 1.0)] {
            let n = 20000;
            let mut acc = 0.0;
            for i in 0..n {
                let w = Complex64::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5) / n as f64);
                acc += rho.green(x, w).unwrap() / n as f64;
            }
            assert!(acc.abs() < 1e-6, "x = {x}: {acc}");
        }
    }

    #[test]
    fn custom_uniform_disk_matches_closed_forms() {
        // Uniform density on 𝔻: m(z) = (1 - |z|²)/2 inside, θ = 1/4.
        let rho = BackgroundMeasure::custom(|z| if z.norm() < 1.0 { 1.0 / PI } else { 0.0 }, 1.0, 48).unwrap();
        assert!((rho.theta() - 0.25).abs() < 2e-3, "theta {}", rho.theta());
        for z in [c(0.0, 0.0), c(0.5, 0.2), c(2.0, 0.0)] {
            let exact = if z.norm() < 1.0 { 0.5 * (1.0 - z.norm_sqr()) } else { -z.norm().ln() };
            assert!((rho.log_potential(z) - exact).abs() < 2e-3, "{z}");
        }
    }
}
