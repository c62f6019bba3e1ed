use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

/// First passage of `B_t + a t` above `A` against the inverse-Gaussian law with
/// mean `A/a` and shape `A²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeReport {
    pub a: f64,
    pub level: f64,
    pub n: usize,
    pub step: f64,
    pub mean: f64,
    pub variance: f64,
    pub expected_mean: f64,
    /// `A/a³`, the variance of the inverse-Gaussian law.
    pub variance_inverse_gaussian: f64,
    /// `aA`, the alternative candidate; recorded, not asserted.
    pub variance_alternative: f64,
    pub ks_distance: f64,
    pub ks_pvalue: f64,
}

/// Euler scheme with step `step`; a Brownian-bridge crossing test between grid
/// points removes most of the discretization overshoot.
pub fn hitting_time_selftest(a: f64, level: f64, n: usize, step: f64, seed: u64) -> Result<HittingTimeReport> {
    if !(a > 0.0 && level > 0.0 && step > 0.0) {
        return Err(Error::Parameter(format!("need a, A, step > 0 (a = {a}, A = {level}, step = {step})")));
    }
    if n < 2 {
        return Err(Error::Parameter("need at least two paths".into()));
    }
    let sd = step.sqrt();
    let times: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i);
            let (mut t, mut x) = (0.0, 0.0);
            loop {
                let y = x + a * step + sd * rng.sample::<f64, _>(StandardNormal);
                if y >= level {
                    return t + step;
                }
                // probability that the bridge from x to y crossed the level
                let p = (-2.0 * (level - x) * (level - y) / step).exp();
                if rng.random::<f64>() < p {
                    return t + 0.5 * step;
                }
                t += step;
                x = y;
            }
        })
        .collect();
    let nf = n as f64;
    let mean = times.iter().sum::<f64>() / nf;
    let variance = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let (mu, lambda) = (level / a, level * level);
    let ks_distance = stats::ks_one_sample(&times, |x| stats::inverse_gaussian_cdf(x, mu, lambda));
    let ks_pvalue = stats::kolmogorov_pvalue(ks_distance, n);
    Ok(HittingTimeReport {
        a,
        level,
        n,
        step,
        mean,
        variance,
        expected_mean: mu,
        variance_inverse_gaussian: level / a.powi(3),
        variance_alternative: a * level,
        ks_distance,
        ks_pvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_level_has_small_mean() {
        let r = hitting_time_selftest(1.0, 1e-3, 1000, 1e-6, 1).unwrap();
        assert!(r.mean < 1e-2, "{}", r.mean);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(hitting_time_selftest(0.0, 1.0, 10, 0.01, 1).is_err());
    }
}
