//! Weighted collections of observable vectors produced by one sampler pipeline.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    /// Replica index under the ensemble's root seed.
    pub seed: u64,
    /// Unnormalized importance weight.
    pub weight: f64,
    /// Constant added to the field by the pipeline's normalization (0 if none).
    pub field_shift: f64,
    /// Log of the pre-normalization total mass.
    pub log_total: f64,
    pub observables: Vec<f64>,
}

/// Acceptance bookkeeping of a rejection sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub attempts: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    pub fn merge(&mut self, other: AcceptanceStats) {
        self.attempts += other.attempts;
        self.accepted += other.accepted;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub pipeline: String,
    pub root_seed: u64,
    pub probe_names: Vec<String>,
    pub records: Vec<EnsembleRecord>,
    pub acceptance: Option<AcceptanceStats>,
    /// Fraction of the sample count below which the ESS is flagged.
    pub ess_floor_fraction: f64,
    /// Free-form numeric diagnostics (clipped mass, tail bounds, ...).
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Ensemble {
    pub fn new(pipeline: &str, root_seed: u64, probe_names: Vec<String>) -> Self {
        Ensemble {
            pipeline: pipeline.to_string(),
            root_seed,
            probe_names,
            records: Vec::new(),
            acceptance: None,
            ess_floor_fraction: 0.1,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.weight).collect()
    }

    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        stats::self_normalize(&self.weights())
    }

    pub fn ess(&self) -> f64 {
        stats::ess(&self.weights())
    }

    pub fn ess_floor(&self) -> f64 {
        self.ess_floor_fraction * self.len() as f64
    }

    pub fn ess_below_floor(&self) -> bool {
        self.ess() < self.ess_floor()
    }

    pub fn observables(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.observables.clone()).collect()
    }

    /// Sets warning flags derived from the records; call after the last record.
    pub fn finish(&mut self) -> Result<()> {
        if self.records.iter().all(|r| !r.weight.is_finite()) && !self.records.is_empty() {
            return Err(Error::Numeric("all importance weights are non-finite".into()));
        }
        self.refresh_ess_warning();
        Ok(())
    }

    /// Changes the ESS floor and refreshes the matching warning.
    pub fn set_ess_floor_fraction(&mut self, fraction: f64) {
        self.ess_floor_fraction = fraction;
        self.refresh_ess_warning();
    }

    fn refresh_ess_warning(&mut self) {
        self.warnings.retain(|w| !w.starts_with("ess "));
        if self.ess_below_floor() {
            self.warnings.push(format!("ess {:.1} below floor {:.1}", self.ess(), self.ess_floor()));
        }
    }

    /// Records `range` of this ensemble as a new ensemble (same metadata).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Ensemble {
        Ensemble { records: self.records[range].to_vec(), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_normalize_and_flag_low_ess() {
        let mut e = Ensemble::new("t", 1, vec!["a".into()]);
        for i in 0..20 {
            let weight = if i == 0 { 1e6 } else { 1.0 };
            e.records.push(EnsembleRecord { seed: i, weight, field_shift: 0.0, log_total: 0.0, observables: vec![0.5] });
        }
        let w = e.normalized_weights().unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        e.finish().unwrap();
        assert_eq!(e.warnings.len(), 1);
    }
}
