use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::normal_cdf;

/// Joint law of `(X, Y, Z)` for the Fubini identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum FubiniSpec {
    /// Point mass at `(x, y, z)`.
    Deterministic { x: f64, y: f64, z: f64 },
    /// `X = Y ~ N(0, 1)`, `Z = 1`; expectations in closed form.
    StandardGaussian,
    /// `X ~ N(0, 1)`, `Y = X + shift·|N'|`, `Z = exp(X/2)`, by Monte Carlo.
    Sampled { shift: f64, n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FubiniReport {
    pub spec: FubiniSpec,
    pub delta: f64,
    pub f1_lhs: f64,
    pub f1_rhs: f64,
    pub f2_lhs: f64,
    pub f2_rhs: f64,
    pub f1_discrepancy: f64,
    pub f2_discrepancy: f64,
}

impl FubiniReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.f1_discrepancy.max(self.f2_discrepancy)
    }
}

const QUAD_STEP: f64 = 1e-4;

/// Composite midpoint rule over `[lo, hi]`.
fn midpoint(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = ((hi - lo) / QUAD_STEP).ceil() as usize;
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| f(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `∫ Σ_i c_i 1[x ∈ [a_i, b_i]] dx` by quadrature, with the integrand evaluated
/// from sorted endpoint prefix sums.
fn integrate_intervals(intervals: &[(f64, f64, f64)]) -> f64 {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * intervals.len());
    for &(a, b, c) in intervals {
        if b > a {
            events.push((a, c));
            events.push((b, -c));
        }
    }
    if events.is_empty() {
        return 0.0;
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let xs: Vec<f64> = events.iter().map(|e| e.0).collect();
    let mut prefix = Vec::with_capacity(events.len());
    let mut acc = 0.0;
    for e in &events {
        acc += e.1;
        prefix.push(acc);
    }
    let value = |x: f64| {
        let i = xs.partition_point(|v| *v <= x);
        if i == 0 {
            0.0
        } else {
            prefix[i - 1]
        }
    };
    midpoint(value, xs[0] - 1.0, xs[xs.len() - 1] + 1.0)
}

/// Both sides of
/// `∫ E[Z 1{X ∈ [-x-δ, δ-x]}] dx = 2δ E[Z]` and
/// `∫ E[Z 1{X ≤ δ-x, Y ≥ -x-δ}] dx = E[Z ((Y - X + 2δ) ∨ 0)]`.
pub fn fubini_selftest(spec: &FubiniSpec, delta: f64) -> Result<FubiniReport> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta = {delta} must be positive")));
    }
    let (f1_lhs, f1_rhs, f2_lhs, f2_rhs) = match *spec {
        FubiniSpec::StandardGaussian => {
            let p = |x: f64| normal_cdf(delta - x) - normal_cdf(-x - delta);
            let lhs = midpoint(p, -12.0, 12.0);
            (lhs, 2.0 * delta, lhs, 2.0 * delta)
        }
        FubiniSpec::Deterministic { x, y, z } => fubini_sample(&[(x, y, z)], delta),
        FubiniSpec::Sampled { shift, n, seed } => {
            if n == 0 {
                return Err(Error::Parameter("need at least one draw".into()));
            }
            let mut r = rng::stream(seed, 0);
            let draws: Vec<(f64, f64, f64)> = (0..n)
                .map(|_| {
                    let x: f64 = r.sample(StandardNormal);
                    let e: f64 = r.sample(StandardNormal);
                    (x, x + shift * e.abs(), (0.5 * x).exp())
                })
                .collect();
            fubini_sample(&draws, delta)
        }
    };
    Ok(FubiniReport {
        spec: *spec,
        delta,
        f1_lhs,
        f1_rhs,
        f2_lhs,
        f2_rhs,
        f1_discrepancy: (f1_lhs - f1_rhs).abs(),
        f2_discrepancy: (f2_lhs - f2_rhs).abs(),
    })
}

/// Both identities under the empirical law of `draws`.
fn fubini_sample(draws: &[(f64, f64, f64)], delta: f64) -> (f64, f64, f64, f64) {
    let n = draws.len() as f64;
    let i1: Vec<(f64, f64, f64)> = draws.iter().map(|&(x, _, z)| (-x - delta, delta - x, z / n)).collect();
    let i2: Vec<(f64, f64, f64)> = draws.iter().map(|&(x, y, z)| (-y - delta, delta - x, z / n)).collect();
    let ez = draws.iter().map(|d| d.2).sum::<f64>() / n;
    let rhs2 = draws.iter().map(|&(x, y, z)| z * (y - x + 2.0 * delta).max(0.0)).sum::<f64>() / n;
    (integrate_intervals(&i1), 2.0 * delta * ez, integrate_intervals(&i2), rhs2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_point() {
        let r = fubini_selftest(&FubiniSpec::Deterministic { x: 0.0, y: 0.0, z: 1.0 }, 0.5).unwrap();
        assert!((r.f1_lhs - 1.0).abs() < 1e-6 && (r.f1_rhs - 1.0).abs() < 1e-12);
        assert!(r.max_discrepancy() < 1e-6);
    }

    #[test]
    fn gaussian_quadrature() {
        let r = fubini_selftest(&FubiniSpec::StandardGaussian, 0.25).unwrap();
        assert!((r.f1_lhs - 0.5).abs() < 1e-4, "{}", r.f1_lhs);
    }

    #[test]
    fn equal_xy_reduces_f2_to_f1() {
        let r = fubini_selftest(&FubiniSpec::Sampled { shift: 0.0, n: 2000, seed: 4 }, 0.3).unwrap();
        assert!((r.f2_rhs - r.f1_rhs).abs() < 1e-12);
        assert!(r.max_discrepancy() < 1e-4, "{r:?}");
        let r = fubini_selftest(&FubiniSpec::Sampled { shift: 0.7, n: 2000, seed: 4 }, 0.3).unwrap();
        assert!(r.max_discrepancy() < 1e-4, "{r:?}");
    }
}
