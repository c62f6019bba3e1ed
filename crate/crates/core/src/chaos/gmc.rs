use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::measure::Measure;
use crate::error::{Error, Result};
use crate::field_core::{angular_covariance, angular_variance, BackgroundKind, BackgroundMeasure, CylinderGrid, DirichletSampler, Field, Geometry, PlanarGrid};

/// Default planar regularization constant: a lattice cell of size `h` behaves like a
/// circle average at radius `c·h`. See [`calibrate_planar_constant`].
pub const DEFAULT_PLANAR_CALIBRATION: f64 = 0.1985;

pub fn liouville_q(gamma: f64) -> f64 {
    2.0 / gamma + gamma / 2.0
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("gamma = {gamma} outside (0, 2)")))
    }
}

/// One closed-form term of a deterministic log-singular field, in plane coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum SingularTerm {
    Constant { value: f64 },
    /// `-α log|z - p|`; cells containing `p` are evaluated half a cell diagonal away.
    Log { alpha: f64, re: f64, im: f64 },
    /// `coef · log(|z| ∨ 1)`.
    LogAbsMax { coef: f64 },
    /// `coef · m_ρ(log 1/|z - ·|)`.
    Potential { coef: f64, background: BackgroundKind },
    /// `-α log|z - w|` for the cylinder cell center `w` of cell `(row, col)`, with
    /// the logarithm replaced by the lattice covariance of the lateral field so the
    /// singularity matches the one produced by sampling `w` from the lattice measure.
    LatticeLog { alpha: f64, row: usize, col: usize },
}

/// Sum of [`SingularTerm`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularPart {
    pub terms: Vec<SingularTerm>,
}

impl SingularPart {
    pub fn none() -> Self {
        SingularPart::default()
    }

    pub fn with(mut self, term: SingularTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value at a single plane point (no cell rule; `LatticeLog` uses the continuum log).
    pub fn value_at(&self, z: Complex64) -> Result<f64> {
        let mut acc = 0.0;
        for term in &self.terms {
            acc += match term {
                SingularTerm::Constant { value } => *value,
                SingularTerm::Log { alpha, re, im } => {
                    let d = (z - Complex64::new(*re, *im)).norm();
                    if d == 0.0 {
                        return Err(Error::Singularity(format!("log singularity evaluated at {z}")));
                    }
                    -alpha * d.ln()
                }
                SingularTerm::LogAbsMax { coef } => coef * z.norm().max(1.0).ln(),
                SingularTerm::Potential { coef, background } => {
                    coef * BackgroundMeasure::from_kind(*background)?.log_potential(z)
                }
                SingularTerm::LatticeLog { .. } => {
                    return Err(Error::Geometry("lattice log term needs a cylinder cell".into()))
                }
            };
        }
        Ok(acc)
    }

    /// Values at every cell of `geom` (inactive cells get 0).
    pub fn evaluate(&self, geom: &Geometry) -> Result<Vec<f64>> {
        let n = geom.len();
        let mut out = vec![0.0; n];
        for term in &self.terms {
            match term {
                SingularTerm::Constant { value } => out.iter_mut().for_each(|v| *v += value),
                SingularTerm::Log { alpha, re, im } => {
                    let p = Complex64::new(*re, *im);
                    for (k, v) in out.iter_mut().enumerate() {
                        let d = if geom.cell_contains(k, p) { geom.half_diagonal(k) } else { (geom.center(k) - p).norm() };
                        *v -= alpha * d.ln();
                    }
                }
                SingularTerm::LogAbsMax { coef } => {
                    for (k, v) in out.iter_mut().enumerate() {
                        *v += coef * geom.center(k).norm().max(1.0).ln();
                    }
                }
                SingularTerm::Potential { coef, background } => {
                    let rho = BackgroundMeasure::from_kind(*background)?;
                    for (k, v) in out.iter_mut().enumerate() {
                        *v += coef * rho.log_potential(geom.center(k));
                    }
                }
                SingularTerm::LatticeLog { alpha, row, col } => {
                    let g = geom
                        .as_cylinder()
                        .ok_or_else(|| Error::Geometry("lattice log term needs a cylinder grid".into()))?;
                    if *row >= g.n_t() || *col >= g.n_theta() {
                        return Err(Error::Geometry(format!("cell ({row}, {col}) outside the cylinder")));
                    }
                    let table = lattice_log_table(g, *row, *col);
                    out.iter_mut().zip(&table).for_each(|(v, x)| *v += alpha * x);
                }
            }
        }
        for (k, v) in out.iter_mut().enumerate() {
            if !geom.is_active(k) {
                *v = 0.0;
            }
        }
        Ok(out)
    }
}

/// `-log|z - w|` with the lateral part replaced by its lattice covariance:
/// `C_lat(t - t_w, θ - θ_w) - (t - t_w)⁺ - t_w`.
fn lattice_log_table(g: &CylinderGrid, row: usize, col: usize) -> Vec<f64> {
    let nth = g.n_theta();
    let tw = g.t_of_row(row);
    let mut out = vec![0.0; g.len()];
    let mut by_col = vec![0.0; nth];
    for r in 0..g.n_t() {
        let dt = g.t_of_row(r) - tw;
        for (j, c) in by_col.iter_mut().enumerate() {
            let dcol = (j + nth - col) % nth;
            *c = angular_covariance(nth, dt, dcol as f64 * g.dtheta());
        }
        for j in 0..nth {
            out[r * nth + j] = by_col[j] - dt.max(0.0) - tw;
        }
    }
    out
}

/// Per-cell regularization of the lattice chaos.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    /// Planar grids: effective circle-average radius per cell size.
    pub planar_calibration: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization { planar_calibration: DEFAULT_PLANAR_CALIBRATION }
    }
}

/// Log of the per-cell mass prefactor without the field.
///
/// Planar: `log(h²) + (γ²/2) log(c·h)`. Cylinder (field pulled back by `exp`):
/// `log(dt·dθ) + γQ t - (γ²/2) H` with `H` the lateral lattice variance; the radial
/// part is sampled exactly, so only the lateral variance needs normalizing.
pub fn base_log_mass(geom: &Geometry, gamma: f64, reg: &Regularization) -> Vec<f64> {
    match geom {
        Geometry::Planar(g) => {
            let b = g.cell_area().ln() + 0.5 * gamma * gamma * (reg.planar_calibration * g.cell_size()).ln();
            (0..g.len()).map(|k| if g.is_interior(k) { b } else { f64::NEG_INFINITY }).collect()
        }
        Geometry::Cylinder(g) => {
            let q = liouville_q(gamma);
            let b = g.cell_area().ln() - 0.5 * gamma * gamma * angular_variance(g.n_theta());
            (0..g.len()).map(|k| b + gamma * q * g.coords(k).0).collect()
        }
    }
}

/// Lattice chaos `μ = Σ_k base_k · exp(γ (h_k + singular_k))`.
pub fn gmc_measure(field: &Field, gamma: f64, singular: &SingularPart) -> Result<Measure> {
    let s = singular.evaluate(field.geometry())?;
    gmc_measure_with(field, gamma, &s, &Regularization::default())
}

/// As [`gmc_measure`] with the singular part already evaluated per cell.
pub fn gmc_measure_with(field: &Field, gamma: f64, singular: &[f64], reg: &Regularization) -> Result<Measure> {
    check_gamma(gamma)?;
    let geom = field.geometry();
    if singular.len() != geom.len() {
        return Err(Error::Geometry("singular part evaluated on a different grid".into()));
    }
    let base = base_log_mass(geom, gamma, reg);
    let values = field.values();
    let logs: Vec<f64> = (0..geom.len())
        .map(|k| if base[k] == f64::NEG_INFINITY { base[k] } else { base[k] + gamma * (values[k] + singular[k]) })
        .collect();
    if let Some(k) = logs.iter().position(|v| !v.is_finite() && *v != f64::NEG_INFINITY) {
        return Err(Error::Numeric(format!("non-finite chaos density at cell {k}")));
    }
    Measure::from_log_masses(geom.clone(), &logs, gamma * field.constant())
}

/// Planar constant `c` with `Var h(0) = -log(c·h)` for the zero-boundary lattice
/// field on the unit disk, averaged over the four cells nearest the center and
/// corrected by the conformal radius `1 - |z|²`.
pub fn calibrate_planar_constant(resolution: usize) -> Result<f64> {
    let grid = PlanarGrid::new(resolution, 1.0)?;
    let sampler = DirichletSampler::new(&grid)?;
    let h = grid.cell_size();
    let mut cells: Vec<usize> = (0..grid.len()).filter(|&k| grid.is_interior(k)).collect();
    cells.sort_by(|&a, &b| grid.center(a).norm().total_cmp(&grid.center(b).norm()));
    let acc: f64 = cells[..4]
        .iter()
        .map(|&k| {
            let cr = 1.0 - grid.center(k).norm_sqr();
            (-(sampler.covariance(k, k) - cr.ln())).exp() / h
        })
        .sum();
    Ok(acc / 4.0)
}

/// `E μ(r𝔻)` for the zero-boundary GFF on `𝔻`: `2π(1 - (1 - r²)^{1+γ²/2}) / (2 + γ²)`.
pub fn expected_disk_mass(gamma: f64, r: f64) -> f64 {
    let g2 = gamma * gamma;
    2.0 * std::f64::consts::PI * (1.0 - (1.0 - r * r).powf(1.0 + g2 / 2.0)) / (2.0 + g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_core::{CylinderGrid, Pinning};

    #[test]
    fn tiny_gamma_gives_lebesgue_area() {
        let grid = PlanarGrid::new(64, 1.0).unwrap();
        let f = crate::field_core::sample_dirichlet_gff(&grid, 1).unwrap();
        let m = gmc_measure(&f, 1e-9, &SingularPart::none()).unwrap();
        let area = (0..grid.len()).filter(|&k| grid.is_interior(k)).count() as f64 * grid.cell_area();
        assert!((m.total() / area - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_shift_moves_only_the_scale() {
        let g = CylinderGrid::aligned(10, 10, 16).unwrap();
        let f = crate::field_core::WholePlaneCylinderSampler::new(&g).sample(&mut crate::rng::stream(3, 0));
        let gamma = 1.3;
        let a = gmc_measure(&f, gamma, &SingularPart::none()).unwrap();
        let b = gmc_measure(&f.shifted(0.77), gamma, &SingularPart::none()).unwrap();
        assert_eq!(a.normalize().unwrap(), b.normalize().unwrap());
        assert!((b.log_total() - a.log_total() - gamma * 0.77).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_gamma() {
        let g = Geometry::Planar(PlanarGrid::new(16, 1.0).unwrap());
        let f = Field::new(g.clone(), vec![0.0; g.len()], Pinning::ZeroBoundary).unwrap();
        assert!(matches!(gmc_measure(&f, 2.0, &SingularPart::none()), Err(Error::Parameter(_))));
        assert!(matches!(gmc_measure(&f, 0.0, &SingularPart::none()), Err(Error::Parameter(_))));
    }

    #[test]
    fn insertion_cell_uses_half_diagonal() {
        let grid = PlanarGrid::new(16, 1.0).unwrap();
        let geom = Geometry::Planar(grid.clone());
        let p = Complex64::new(0.01, 0.02);
        let s = SingularPart::none().with(SingularTerm::Log { alpha: 2.0, re: p.re, im: p.im });
        let v = s.evaluate(&geom).unwrap();
        let k = grid.cell_of(p).unwrap();
        assert!((v[k] + 2.0 * (grid.cell_size() / 2f64.sqrt()).ln()).abs() < 1e-12);
    }

    #[test]
    fn lattice_log_tracks_continuum_away_from_the_point() {
        let g = CylinderGrid::aligned(20, 20, 64).unwrap();
        let geom = Geometry::Cylinder(g.clone());
        let s = SingularPart::none().with(SingularTerm::LatticeLog { alpha: 1.0, row: 20, col: 0 });
        let v = s.evaluate(&geom).unwrap();
        for k in [0usize, 5 * 64 + 9, 30 * 64 + 40, 22 * 64 + 32] {
            let z = g.center(k);
            let exact = -(z - Complex64::new(1.0, 0.0)).norm().ln();
            assert!((v[k] - exact).abs() < 0.05, "cell {k}: {} vs {exact}", v[k]);
        }
    }

    #[test]
    fn calibration_constant_is_stable() {
        let c = calibrate_planar_constant(128).unwrap();
        assert!((c - DEFAULT_PLANAR_CALIBRATION).abs() < 5e-3, "{c}");
    }

    #[test]
    fn closed_form_disk_mass() {
        // γ → 0 limit is the area πr²
        assert!((expected_disk_mass(1e-8, 0.5) - std::f64::consts::PI * 0.25).abs() < 1e-9);
    }
}
