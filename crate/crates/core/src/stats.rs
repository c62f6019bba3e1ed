//! Weighted two-sample statistics and one-sample goodness-of-fit helpers.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Effective sample size `(Σw)² / Σw²`.
pub fn ess(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Weights scaled to sum to one.
pub fn self_normalize(weights: &[f64]) -> Result<Vec<f64>> {
    let s: f64 = weights.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Numeric(format!("weights sum to {s}")));
    }
    Ok(weights.iter().map(|w| w / s).collect())
}

/// `sup_x |F_a(x) - F_b(x)|` for weighted empirical CDFs (weights normalized internally).
pub fn weighted_ks(xa: &[f64], wa: &[f64], xb: &[f64], wb: &[f64]) -> f64 {
    let sa: f64 = wa.iter().sum();
    let sb: f64 = wb.iter().sum();
    let mut pts: Vec<(f64, f64)> = xa
        .iter()
        .zip(wa)
        .map(|(x, w)| (*x, w / sa))
        .chain(xb.iter().zip(wb).map(|(x, w)| (*x, -w / sb)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut d: f64 = 0.0;
    let mut acc = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let x = pts[i].0;
        while i < pts.len() && pts[i].0 == x {
            acc += pts[i].1;
            i += 1;
        }
        d = d.max(acc.abs());
    }
    d
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Weighted energy distance `2E|X-Y| - E|X-X'| - E|Y-Y'|` (V-statistic form).
pub fn energy_distance(xa: &[Vec<f64>], wa: &[f64], xb: &[Vec<f64>], wb: &[f64]) -> f64 {
    let pooled: Vec<&[f64]> = xa.iter().chain(xb).map(|v| v.as_slice()).collect();
    let na = xa.len();
    let ia: Vec<usize> = (0..na).collect();
    let ib: Vec<usize> = (na..pooled.len()).collect();
    let dist = |i: usize, j: usize| euclid(pooled[i], pooled[j]);
    energy_from(&dist, &ia, wa, &ib, wb)
}

fn energy_from(dist: &dyn Fn(usize, usize) -> f64, ia: &[usize], wa: &[f64], ib: &[usize], wb: &[f64]) -> f64 {
    let sa: f64 = wa.iter().sum();
    let sb: f64 = wb.iter().sum();
    let mut cross = 0.0;
    for (i, wi) in ia.iter().zip(wa) {
        for (j, wj) in ib.iter().zip(wb) {
            cross += wi * wj * dist(*i, *j);
        }
    }
    let within = |ix: &[usize], w: &[f64], s: f64| {
        let mut acc = 0.0;
        for a in 0..ix.len() {
            for b in (a + 1)..ix.len() {
                acc += 2.0 * w[a] * w[b] * dist(ix[a], ix[b]);
            }
        }
        acc / (s * s)
    };
    2.0 * cross / (sa * sb) - within(ia, wa, sa) - within(ib, wb, sb)
}

/// Tuning of [`weighted_two_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub resamples: usize,
    pub significance: f64,
    pub min_ess: f64,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions { resamples: 1000, significance: 0.01, min_ess: 100.0, seed: 0x5eed }
    }
}

/// Per-coordinate KS and joint energy-distance comparison of two weighted samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub ks: Vec<f64>,
    pub ks_pvalues: Vec<f64>,
    pub energy: f64,
    pub energy_pvalue: f64,
    /// Bonferroni combination over all per-coordinate and joint tests.
    pub overall_pvalue: f64,
    pub ess_a: f64,
    pub ess_b: f64,
    pub passed: bool,
}

/// Two-sample test with p-values from a weighted bootstrap of the pooled sample.
///
/// Under the null both samples come from the pooled weighted law; each resample
/// draws `round(ESS)` points per side from it with unit weights, which matches
/// the sampling noise of a weighted empirical law with that effective size.
pub fn weighted_two_sample(
    xa: &[Vec<f64>],
    wa: &[f64],
    xb: &[Vec<f64>],
    wb: &[f64],
    opts: &TestOptions,
) -> Result<TwoSampleResult> {
    let (ess_a, ess_b) = (ess(wa), ess(wb));
    for e in [ess_a, ess_b] {
        if e < opts.min_ess {
            return Err(Error::InsufficientEss { ess: e, floor: opts.min_ess });
        }
    }
    let dim = xa.first().map(|v| v.len()).unwrap_or(0);
    if xb.iter().chain(xa).any(|v| v.len() != dim) || dim == 0 {
        return Err(Error::Config("observable vectors have inconsistent lengths".into()));
    }
    let pa = self_normalize(wa)?;
    let pb = self_normalize(wb)?;
    let col = |x: &[Vec<f64>], c: usize| x.iter().map(|v| v[c]).collect::<Vec<f64>>();
    let ks: Vec<f64> = (0..dim).map(|c| weighted_ks(&col(xa, c), &pa, &col(xb, c), &pb)).collect();

    let pooled: Vec<&[f64]> = xa.iter().chain(xb).map(|v| v.as_slice()).collect();
    let n = pooled.len();
    let mut dmat = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclid(pooled[i], pooled[j]);
            dmat[i * n + j] = d;
            dmat[j * n + i] = d;
        }
    }
    let dist = |i: usize, j: usize| dmat[i * n + j];
    let ia: Vec<usize> = (0..xa.len()).collect();
    let ib: Vec<usize> = (xa.len()..n).collect();
    let energy = energy_from(&dist, &ia, &pa, &ib, &pb);

    let share = ess_a / (ess_a + ess_b);
    let pool_w: Vec<f64> = pa.iter().map(|w| w * share).chain(pb.iter().map(|w| w * (1.0 - share))).collect();
    let picker = WeightedIndex::new(&pool_w).map_err(|e| Error::Numeric(e.to_string()))?;
    let (ma, mb) = (ess_a.round() as usize, ess_b.round() as usize);
    let (ua, ub) = (vec![1.0; ma], vec![1.0; mb]);
    let mut ks_exceed = vec![0usize; dim];
    let mut energy_exceed = 0usize;
    let root = rng::derive_root(opts.seed, "bootstrap");
    let mut r = rng::stream(root, 0);
    for _ in 0..opts.resamples {
        let sa: Vec<usize> = (0..ma).map(|_| picker.sample(&mut r)).collect();
        let sb: Vec<usize> = (0..mb).map(|_| picker.sample(&mut r)).collect();
        for c in 0..dim {
            let xa_s: Vec<f64> = sa.iter().map(|&i| pooled[i][c]).collect();
            let xb_s: Vec<f64> = sb.iter().map(|&i| pooled[i][c]).collect();
            if weighted_ks(&xa_s, &ua, &xb_s, &ub) >= ks[c] {
                ks_exceed[c] += 1;
            }
        }
        if energy_from(&dist, &sa, &ua, &sb, &ub) >= energy {
            energy_exceed += 1;
        }
    }
    let pv = |e: usize| (1.0 + e as f64) / (1.0 + opts.resamples as f64);
    let ks_pvalues: Vec<f64> = ks_exceed.iter().map(|&e| pv(e)).collect();
    let energy_pvalue = pv(energy_exceed);
    let min_p = ks_pvalues.iter().copied().fold(energy_pvalue, f64::min);
    let overall_pvalue = (min_p * (dim + 1) as f64).min(1.0);
    Ok(TwoSampleResult {
        ks,
        ks_pvalues,
        energy,
        energy_pvalue,
        overall_pvalue,
        ess_a,
        ess_b,
        passed: overall_pvalue > opts.significance,
    })
}

/// One-sample KS distance `sup |F_n - F|` against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail `P(√n D > x)`.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let x = d * (n as f64).sqrt();
    if x < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Asymptotic KS critical value `c(α)/√n`.
pub fn kolmogorov_critical(alpha: f64, n: usize) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal draw conditioned on `[a, b]` with the probability of `[a, b]`;
/// `None` if that probability underflows.
pub fn truncated_normal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Option<(f64, f64)> {
    use statrs::distribution::{ContinuousCDF, Normal};
    if !(a < b) {
        return None;
    }
    // work in the lower tail, where the CDF keeps its relative precision
    let (lo, hi, flip) = if a > 0.0 { (-b, -a, true) } else { (a, b, false) };
    let (pl, ph) = (normal_cdf(lo), normal_cdf(hi));
    let p = ph - pl;
    if !(p > 0.0) {
        return None;
    }
    let n = Normal::standard();
    let u = pl + rng.random::<f64>() * p;
    let x = n.inverse_cdf(u).clamp(lo, hi);
    Some((if flip { -x } else { x }, p))
}

/// CDF of the inverse Gaussian law with mean `mu` and shape `lambda`.
pub fn inverse_gaussian_cdf(x: f64, mu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = (lambda / x).sqrt();
    let a = normal_cdf(s * (x / mu - 1.0));
    // e^{2λ/μ} Φ(-s(x/μ + 1)) computed in log space to avoid overflow
    let b_arg = -s * (x / mu + 1.0);
    let b = if b_arg < -30.0 {
        // Mills-ratio asymptotics for the lower normal tail
        let z = -b_arg;
        (2.0 * lambda / mu - 0.5 * z * z - (z * (2.0 * std::f64::consts::PI).sqrt()).ln()).exp()
    } else {
        (2.0 * lambda / mu + normal_cdf(b_arg).ln()).exp()
    };
    (a + b).min(1.0)
}

/// Pearson chi-square statistic and its upper-tail p-value.
pub fn chi_square(observed: &[u64], expected_probs: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(o, p)| {
            let e = p * n as f64;
            (*o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = expected_probs.iter().filter(|p| **p > 0.0).count().saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(dof as f64).expect("positive degrees of freedom").cdf(stat);
    (stat, p)
}

/// Draws from a categorical law (used by bootstrap-style helpers and tests).
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let w = WeightedIndex::new(weights).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(w.sample(rng))
}
