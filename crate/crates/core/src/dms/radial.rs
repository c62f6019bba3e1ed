use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chaos::{check_gamma, liouville_q};
use crate::error::{Error, Result};
use crate::field_core::CylinderGrid;

/// Radial (circle-mean) process of a sphere on the cylinder, one value per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPath {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub maximum_location: usize,
}

impl RadialPath {
    pub fn new(t: Vec<f64>, x: Vec<f64>) -> Self {
        let maximum_location = argmax(&x);
        RadialPath { t, x, maximum_location }
    }

    /// Mean squared increment per unit `t`.
    pub fn quadratic_variation_rate(&self) -> f64 {
        let mut qv = 0.0;
        for w in self.x.windows(2).zip(self.t.windows(2)) {
            qv += (w.0[1] - w.0[0]).powi(2);
            let _ = w.1;
        }
        qv / (self.t[self.t.len() - 1] - self.t[0])
    }
}

pub(crate) fn argmax(x: &[f64]) -> usize {
    x.iter().enumerate().fold(0, |best, (i, v)| if *v > x[best] { i } else { best })
}

/// `|W_u + a u e₁|` for a 3D Brownian motion `W`, sampled at `times` (increasing, ≥ 0).
pub fn drifted_bessel3<R: Rng + ?Sized>(a: f64, times: &[f64], rng: &mut R) -> Vec<f64> {
    let mut p = [0.0f64; 3];
    let mut last = 0.0;
    times
        .iter()
        .map(|&u| {
            let du = u - last;
            let s = du.sqrt();
            p[0] += a * du + s * rng.sample::<f64, _>(StandardNormal);
            p[1] += s * rng.sample::<f64, _>(StandardNormal);
            p[2] += s * rng.sample::<f64, _>(StandardNormal);
            last = u;
            (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
        })
        .collect()
}

/// Maxima-embedded radial path of the Bessel construction, with maximum value 0.
///
/// The log of a Bessel-`δ` excursion, scaled by `2/γ` and run at unit quadratic
/// variation, is a Brownian motion with drift `-(Q - γ)` away from its maximum;
/// seen from the maximum each side is `-|3D Brownian motion with drift Q - γ|`.
/// The grid must have a row centered at `t = 0`.
pub fn sample_bessel_radial<R: Rng + ?Sized>(gamma: f64, grid: &CylinderGrid, rng: &mut R) -> Result<RadialPath> {
    check_gamma(gamma)?;
    let delta = 4.0 - 8.0 / (gamma * gamma);
    // √2 itself rounds to a dimension of a few ulps
    if delta <= 64.0 * f64::EPSILON {
        return Err(Error::UnsupportedRegime(format!(
            "Bessel dimension {delta:.4} ≤ 0 at gamma = {gamma}; use the limiting-procedure sampler"
        )));
    }
    let zero = grid
        .row_of(0.0)
        .filter(|&r| grid.t_of_row(r).abs() < 1e-9 * grid.dt())
        .ok_or_else(|| Error::Geometry("Bessel radial path needs a row centered at t = 0".into()))?;
    let a = liouville_q(gamma) - gamma;
    let nt = grid.n_t();
    let t: Vec<f64> = (0..nt).map(|r| grid.t_of_row(r)).collect();
    let up: Vec<f64> = t[zero + 1..].to_vec();
    let down: Vec<f64> = t[..zero].iter().rev().map(|s| -s).collect();
    let r_up = drifted_bessel3(a, &up, rng);
    let r_down = drifted_bessel3(a, &down, rng);
    let mut x = vec![0.0; nt];
    for (i, r) in r_up.iter().enumerate() {
        x[zero + 1 + i] = -r;
    }
    for (i, r) in r_down.iter().enumerate() {
        x[zero - 1 - i] = -r;
    }
    Ok(RadialPath { t, x, maximum_location: zero })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn maximum_sits_at_zero_and_rate_is_one() {
        let g = CylinderGrid::aligned(200, 200, 64).unwrap();
        let mut qv = 0.0;
        for i in 0..200 {
            let p = sample_bessel_radial(1.7, &g, &mut rng::stream(1, i)).unwrap();
            assert_eq!(p.maximum_location, 200);
            assert_eq!(argmax(&p.x), 200);
            qv += p.quadratic_variation_rate();
        }
        // the drift adds (a·dt)² per step on top of dt
        let a = liouville_q(1.7) - 1.7;
        let expected = 1.0 + a * a * g.dt();
        assert!((qv / 200.0 / expected - 1.0).abs() < 0.05, "{}", qv / 200.0);
    }

    #[test]
    fn low_gamma_is_unsupported() {
        let g = CylinderGrid::aligned(10, 10, 16).unwrap();
        let r = sample_bessel_radial(2f64.sqrt(), &g, &mut rng::stream(1, 0));
        assert!(matches!(r, Err(Error::UnsupportedRegime(_))));
    }
}
