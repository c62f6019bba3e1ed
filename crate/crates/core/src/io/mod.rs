//! Persistence: run configuration, binary snapshots, ensemble CSV and plot data.

mod config;
mod ensemble_io;
mod plot;
mod snapshot;

pub use config::{
    probe_fingerprint, CalibrationSection, CompareSection, DkrvSection, DmsSection, GridSection, RunConfig, SchemeSection,
};
pub use ensemble_io::{ensemble_csv, grid_fingerprint, read_ensemble, write_ensemble, EnsembleManifest, Fingerprints};
pub use plot::{emit_plot_data, plot_data, PlotInput, PlotKind, HISTOGRAM_BINS};
pub use snapshot::{
    decode_field, decode_measure, encode_field, encode_measure, read_field, read_measure, write_field, write_measure,
};

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::dms::{Embedding, MarkedPoint, SphereSample};
use crate::ensemble::AcceptanceStats;
use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SphereSidecar {
    gamma: f64,
    embedding: Embedding,
    marked_points: Vec<MarkedPoint>,
    log_total: f64,
    weight: f64,
    acceptance: AcceptanceStats,
    fingerprints: Fingerprints,
}

/// Writes `<stem>.field`, `<stem>.measure` and a `<stem>.json` sidecar into `dir`.
pub fn write_sphere_sample(dir: &Path, stem: &str, s: &SphereSample, gamma: f64, fp: &Fingerprints) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_field(&dir.join(format!("{stem}.field")), &s.field)?;
    write_measure(&dir.join(format!("{stem}.measure")), &s.measure)?;
    let side = SphereSidecar {
        gamma,
        embedding: s.embedding,
        marked_points: s.marked_points.clone(),
        log_total: s.log_total,
        weight: s.weight,
        acceptance: s.acceptance,
        fingerprints: fp.clone(),
    };
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&side)?)?;
    Ok(())
}

/// Loads a sample written by [`write_sphere_sample`] from its sidecar path;
/// returns it with its `γ`.
pub fn read_sphere_sample(sidecar: &Path) -> Result<(SphereSample, f64)> {
    let side: SphereSidecar = serde_json::from_slice(&std::fs::read(sidecar)?)?;
    let s = SphereSample {
        field: read_field(&sidecar.with_extension("field"))?,
        measure: read_measure(&sidecar.with_extension("measure"))?,
        marked_points: side.marked_points,
        embedding: side.embedding,
        log_total: side.log_total,
        weight: side.weight,
        acceptance: side.acceptance,
    };
    Ok((s, side.gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dms::LimitingSphere;

    #[test]
    fn sphere_sample_round_trip_and_profile_peak() {
        let gamma = 1.6;
        let grid = LimitingSphere::default_grid(gamma, 1.0, 16).unwrap();
        let ls = LimitingSphere::new(gamma, 1.0, 0.5, &grid).unwrap();
        let s = ls.sample(&mut crate::rng::stream(2, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_sphere_sample(dir.path(), "s", &s, gamma, &Fingerprints::default()).unwrap();
        let (back, g) = read_sphere_sample(&dir.path().join("s.json")).unwrap();
        assert_eq!(back, s);
        assert_eq!(g, gamma);
        let text = plot_data(&PlotInput::Sphere(&back, g), PlotKind::RadialProfile).unwrap();
        let rows: Vec<Vec<f64>> =
            text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
        let peak = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
        assert!(peak[0].abs() < 0.5 * back.grid().dt() + 1e-12, "peak at t = {}", peak[0]);
    }
}
