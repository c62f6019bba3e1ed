use serde::{Deserialize, Serialize};

use super::gmc::liouville_q;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub q: f64,
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
    /// Whether `q` lies in the finiteness range, when a range was supplied.
    pub admissible: Option<bool>,
}

/// Finiteness threshold `4/γ² ∧ min_i (2/γ)(Q - α_i)` for `E μ(ℂ)^q`.
pub fn moment_threshold(gamma: f64, alphas: &[f64]) -> f64 {
    let q = liouville_q(gamma);
    alphas.iter().fold(4.0 / (gamma * gamma), |m, a| m.min(2.0 / gamma * (q - a)))
}

/// Positive moments are finite below the threshold; negative moments always are.
pub fn moment_admissible(q: f64, threshold: f64) -> bool {
    q < threshold
}

/// `E[M^q]` from log-masses with its jackknife standard error.
pub fn moment_from_log_totals(log_totals: &[f64], q: f64, threshold: Option<f64>) -> MomentEstimate {
    let n = log_totals.len();
    let admissible = threshold.map(|t| moment_admissible(q, t));
    if q == 0.0 {
        return MomentEstimate { q, value: 1.0, std_error: 0.0, n, admissible };
    }
    let xs: Vec<f64> = log_totals.iter().map(|l| (q * l).exp()).collect();
    let sum: f64 = xs.iter().sum();
    let mean = sum / n as f64;
    // leave-one-out means
    let loo: Vec<f64> = xs.iter().map(|x| (sum - x) / (n - 1) as f64).collect();
    let loo_mean = loo.iter().sum::<f64>() / n as f64;
    let var = (n - 1) as f64 / n as f64 * loo.iter().map(|m| (m - loo_mean).powi(2)).sum::<f64>();
    MomentEstimate { q, value: mean, std_error: var.sqrt(), n, admissible }
}

/// Monte Carlo `E[μ(ℂ)^q]` over replicas `0..n`; `sampler(i)` returns `log μ(ℂ)`.
pub fn moment_estimate<F>(sampler: F, q: f64, n: usize, threshold: Option<f64>) -> Result<MomentEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    let logs: Result<Vec<f64>> = (0..n as u64).into_par_iter().map(&sampler).collect();
    Ok(moment_from_log_totals(&logs?, q, threshold))
}
