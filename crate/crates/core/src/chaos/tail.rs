use serde::{Deserialize, Serialize};

use super::gmc::liouville_q;
use super::measure::Measure;
use crate::error::{Error, Result};
use crate::field_core::Geometry;

/// Far-field truncation choice with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub truncation_radius: f64,
    /// Mean normalized mass of `2ⁿ ≤ |z| < 2ⁿ⁺¹`, `n = 0, 1, …`.
    pub annulus_masses: Vec<f64>,
    /// Fitted geometric model `b₁ e^{-n b₂}`.
    pub b1: f64,
    pub b2: f64,
    /// Modelled normalized mass beyond the truncation radius.
    pub tail_bound: f64,
}

/// Smallest and largest dyadic exponents a truncation radius may take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLimits {
    pub min_exponent: u32,
    pub max_exponent: u32,
}

impl Default for TailLimits {
    fn default() -> Self {
        TailLimits { min_exponent: 1, max_exponent: 40 }
    }
}

/// Normalized masses of the dyadic annuli `2ⁿ ≤ |z| < 2ⁿ⁺¹` for `n < count`.
pub fn annulus_masses(measure: &Measure, count: usize) -> Result<Vec<f64>> {
    let geom = measure.geometry();
    let mut out = vec![0.0; count];
    let rel = measure.relative_masses();
    let total: f64 = rel.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("annulus masses of a zero measure".into()));
    }
    for (k, m) in rel.iter().enumerate() {
        let r = geom.center(k).norm();
        if r >= 1.0 {
            let n = r.log2().floor() as usize;
            if n < count {
                out[n] += m / total;
            }
        }
    }
    Ok(out)
}

/// Number of dyadic annuli lying entirely inside the grid.
fn covered_annuli(geom: &Geometry) -> usize {
    let outer = match geom {
        Geometry::Planar(g) => g.domain_radius(),
        Geometry::Cylinder(g) => g.t_max().exp(),
    };
    if outer <= 1.0 {
        0
    } else {
        outer.log2().floor() as usize
    }
}

/// Truncation radius `2^N` such that the modelled normalized mass beyond it is at
/// most `target`, from annulus masses averaged over pilot measures.
pub fn tail_truncation(
    gamma: f64,
    infinity_alpha: f64,
    pilot: &[Measure],
    target: f64,
    limits: TailLimits,
) -> Result<TailEstimate> {
    if infinity_alpha >= liouville_q(gamma) {
        return Err(Error::Parameter(format!("weight {infinity_alpha} at infinity is not below Q")));
    }
    if pilot.is_empty() {
        return Err(Error::Config("tail truncation needs pilot measures".into()));
    }
    let count = pilot.iter().map(|m| covered_annuli(m.geometry())).min().unwrap_or(0);
    let mut mean = vec![0.0; count];
    for m in pilot {
        for (a, x) in mean.iter_mut().zip(annulus_masses(m, count)?) {
            *a += x / pilot.len() as f64;
        }
    }
    let pts: Vec<(f64, f64)> =
        mean.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(n, m)| (n as f64, m.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::Config("pilot grids cover fewer than two dyadic annuli".into()));
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let b2 = -slope;
    let b1 = (my - slope * mx).exp();
    let tail = |n: u32| {
        if b2 <= 0.0 {
            f64::INFINITY
        } else {
            b1 * (-(n as f64) * b2).exp() / -(-b2).exp_m1()
        }
    };
    let estimate = |n: u32| TailEstimate {
        truncation_radius: 2f64.powi(n as i32),
        annulus_masses: mean.clone(),
        b1,
        b2,
        tail_bound: tail(n).min(1.0),
    };
    if target >= 1.0 {
        return Ok(estimate(limits.min_exponent));
    }
    for n in limits.min_exponent..=limits.max_exponent {
        if tail(n) <= target {
            return Ok(estimate(n));
        }
    }
    Err(Error::Truncation {
        target,
        radius: 2f64.powi(limits.max_exponent as i32),
        achieved: tail(limits.max_exponent),
    })
}
