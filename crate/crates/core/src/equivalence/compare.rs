use serde::{Deserialize, Serialize};

use crate::chaos::{Probe, ResolvedProbes};
use crate::dkrv::{DkrvSampler, InsertionRule, LqgParams};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::field_core::{BackgroundMeasure, Geometry};
use crate::stats::{self, TestOptions, TwoSampleResult};

/// Outcome of a weighted two-sample comparison of two ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label_a: String,
    pub label_b: String,
    pub probe_names: Vec<String>,
    pub n_a: usize,
    pub n_b: usize,
    pub options: TestOptions,
    pub result: TwoSampleResult,
    pub passed: bool,
    /// Known sources of bias at finite resolution, carried into every report.
    pub bias_budget: Vec<String>,
}

impl ComparisonReport {
    pub fn overall_pvalue(&self) -> f64 {
        self.result.overall_pvalue
    }

    /// One CSV row per probe plus a joint row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("test,statistic,p_value\n");
        for (i, name) in self.probe_names.iter().enumerate() {
            s.push_str(&format!("ks:{name},{},{}\n", self.result.ks[i], self.result.ks_pvalues[i]));
        }
        s.push_str(&format!("energy,{},{}\n", self.result.energy, self.result.energy_pvalue));
        s.push_str(&format!("overall,,{}\n", self.result.overall_pvalue));
        s
    }
}

/// Weighted KS per probe and energy distance on the observable vectors.
pub fn compare_ensembles(a: &Ensemble, b: &Ensemble, opts: &TestOptions) -> Result<ComparisonReport> {
    if a.probe_names != b.probe_names {
        return Err(Error::Config(format!(
            "ensembles observe different probes: {:?} vs {:?}",
            a.probe_names, b.probe_names
        )));
    }
    let result = stats::weighted_two_sample(&a.observables(), &a.weights(), &b.observables(), &b.weights(), opts)?;
    let mut bias_budget = Vec::new();
    for e in [a, b] {
        for w in &e.warnings {
            bias_budget.push(format!("{}: {w}", e.pipeline));
        }
        for key in ["delta", "epsilon", "C", "max_far_end_mass", "r_eps_max", "tail_bound"] {
            if let Some(v) = e.diagnostics.get(key) {
                bias_budget.push(format!("{}: {key} = {v}", e.pipeline));
            }
        }
    }
    Ok(ComparisonReport {
        label_a: a.pipeline.clone(),
        label_b: b.pipeline.clone(),
        probe_names: a.probe_names.clone(),
        n_a: a.len(),
        n_b: b.len(),
        options: *opts,
        passed: result.passed,
        result,
        bias_budget,
    })
}

/// Same insertions under the spherical and the circle background.
pub fn background_independence_test(
    params: &LqgParams,
    geometry: &Geometry,
    n: usize,
    root: u64,
    probes: &[Probe],
    opts: &TestOptions,
) -> Result<ComparisonReport> {
    let resolved = ResolvedProbes::new(probes, geometry)?;
    let rule = InsertionRule::default();
    let sph = DkrvSampler::new(params, &BackgroundMeasure::spherical(), geometry, rule)?;
    let circ = DkrvSampler::new(params, &BackgroundMeasure::unit_circle(), geometry, rule)?;
    let a = sph.ensemble(n, crate::rng::derive_root(root, "spherical"), &resolved, "dkrv-spherical")?;
    let b = circ.ensemble(n, crate::rng::derive_root(root, "circle"), &resolved, "dkrv-circle")?;
    compare_ensembles(&a, &b, opts)
}

/// Rejection frequency of self-comparisons: `pool` is split into consecutive
/// disjoint pairs of halves of size `n`, one test per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub repeats: usize,
    pub rejections: usize,
    pub pvalues: Vec<f64>,
}

impl NullCalibration {
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.repeats as f64
    }
}

pub fn null_calibration(pool: &Ensemble, n: usize, repeats: usize, opts: &TestOptions) -> Result<NullCalibration> {
    if pool.len() < 2 * n * repeats {
        return Err(Error::Config(format!("null calibration needs {} records, pool has {}", 2 * n * repeats, pool.len())));
    }
    let mut pvalues = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let base = 2 * n * r;
        let a = pool.slice(base..base + n);
        let b = pool.slice(base + n..base + 2 * n);
        let o = TestOptions { seed: opts.seed.wrapping_add(r as u64), ..*opts };
        pvalues.push(compare_ensembles(&a, &b, &o)?.overall_pvalue());
    }
    let rejections = pvalues.iter().filter(|p| **p <= opts.significance).count();
    Ok(NullCalibration { repeats, rejections, pvalues })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EnsembleRecord;
    use rand::Rng;

    fn ensemble(n: usize, shift: f64, seed: u64) -> Ensemble {
        let mut r = crate::rng::stream(seed, 0);
        let mut e = Ensemble::new("t", seed, vec!["x".into(), "y".into()]);
        for i in 0..n {
            let x: f64 = r.random();
            let y: f64 = r.random();
            e.records.push(EnsembleRecord { seed: i as u64, weight: 1.0, field_shift: 0.0, log_total: 0.0, observables: vec![x + shift, y] });
        }
        e
    }

    #[test]
    fn detects_shift_and_accepts_null() {
        let opts = TestOptions::default();
        assert!(compare_ensembles(&ensemble(300, 0.0, 1), &ensemble(300, 0.0, 2), &opts).unwrap().passed);
        assert!(!compare_ensembles(&ensemble(300, 0.0, 1), &ensemble(300, 0.3, 2), &opts).unwrap().passed);
    }

    #[test]
    fn refuses_mismatched_probes_and_low_ess() {
        let a = ensemble(300, 0.0, 1);
        let mut b = ensemble(300, 0.0, 2);
        b.probe_names[0] = "z".into();
        assert!(matches!(compare_ensembles(&a, &b, &TestOptions::default()), Err(Error::Config(_))));
        let c = ensemble(50, 0.0, 3);
        assert!(matches!(compare_ensembles(&a, &c, &TestOptions::default()), Err(Error::InsufficientEss { .. })));
    }

    #[test]
    fn csv_has_one_row_per_test() {
        let r = compare_ensembles(&ensemble(200, 0.0, 1), &ensemble(200, 0.0, 2), &TestOptions::default()).unwrap();
        assert_eq!(r.to_csv().lines().count(), 1 + 2 + 2);
    }
}
