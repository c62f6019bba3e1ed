//! Ensembles on disk: one CSV row per record plus a JSON manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::ensemble::{AcceptanceStats, Ensemble, EnsembleRecord};
use crate::error::{Error, Result};
use crate::field_core::Geometry;

const FIXED_COLUMNS: [&str; 4] = ["seed", "weight", "field_shift", "log_total"];

/// Provenance carried by every artifact.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fingerprints {
    pub config: String,
    pub probes: String,
    /// Lattice spacing class of the grid the ensemble was sampled on.
    pub grid: String,
}

/// JSON sidecar of an ensemble CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub pipeline: String,
    pub root_seed: u64,
    pub n: usize,
    pub probe_names: Vec<String>,
    pub ess: f64,
    pub ess_floor_fraction: f64,
    pub acceptance: Option<AcceptanceStats>,
    pub acceptance_rate: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub fingerprints: Fingerprints,
    pub csv_file: String,
    pub csv_sha256: String,
}

/// Grid fingerprint: the kind and cell size, so ensembles whose windows differ
/// but whose lattices match compare as equal.
pub fn grid_fingerprint(geom: &Geometry) -> String {
    let desc = match geom {
        Geometry::Planar(g) => format!("planar:h={}", g.cell_size()),
        Geometry::Cylinder(g) => format!("cylinder:n_theta={}", g.n_theta()),
    };
    hex::encode(Sha256::digest(desc.as_bytes()))
}

pub fn ensemble_csv(e: &Ensemble) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(e.probe_names.iter().cloned());
    w.write_record(&header)?;
    for r in &e.records {
        let mut row = vec![r.seed.to_string(), r.weight.to_string(), r.field_shift.to_string(), r.log_total.to_string()];
        row.extend(r.observables.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`; returns the CSV path.
pub fn write_ensemble(dir: &Path, stem: &str, e: &Ensemble, fingerprints: &Fingerprints) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv_bytes = ensemble_csv(e)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, &csv_bytes)?;
    let manifest = EnsembleManifest {
        pipeline: e.pipeline.clone(),
        root_seed: e.root_seed,
        n: e.len(),
        probe_names: e.probe_names.clone(),
        ess: e.ess(),
        ess_floor_fraction: e.ess_floor_fraction,
        acceptance: e.acceptance,
        acceptance_rate: e.acceptance.map(|a| a.rate()),
        diagnostics: e.diagnostics.clone(),
        warnings: e.warnings.clone(),
        fingerprints: fingerprints.clone(),
        csv_file: format!("{stem}.csv"),
        csv_sha256: hex::encode(Sha256::digest(&csv_bytes)),
    };
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(csv_path)
}

/// Reads an ensemble from its CSV path; the manifest must sit next to it.
pub fn read_ensemble(csv_path: &Path) -> Result<(Ensemble, EnsembleManifest)> {
    let manifest_path = csv_path.with_extension("json");
    let manifest: EnsembleManifest = serde_json::from_slice(&std::fs::read(&manifest_path)?)?;
    let bytes = std::fs::read(csv_path)?;
    if hex::encode(Sha256::digest(&bytes)) != manifest.csv_sha256 {
        return Err(Error::Format(format!("{} does not match its manifest", csv_path.display())));
    }
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = rd.headers()?.iter().map(|s| s.to_string()).collect();
    if header.len() < FIXED_COLUMNS.len() || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(Error::Format("unexpected ensemble CSV header".into()));
    }
    let probe_names = header[FIXED_COLUMNS.len()..].to_vec();
    if probe_names != manifest.probe_names {
        return Err(Error::Format("CSV probes differ from the manifest".into()));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("'{s}': {e}")));
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let seed = row[0].parse::<u64>().map_err(|e| Error::Format(e.to_string()))?;
        let observables = row.iter().skip(FIXED_COLUMNS.len()).map(parse).collect::<Result<Vec<f64>>>()?;
        records.push(EnsembleRecord {
            seed,
            weight: parse(&row[1])?,
            field_shift: parse(&row[2])?,
            log_total: parse(&row[3])?,
            observables,
        });
    }
    let mut e = Ensemble::new(&manifest.pipeline, manifest.root_seed, probe_names);
    e.records = records;
    e.acceptance = manifest.acceptance;
    e.ess_floor_fraction = manifest.ess_floor_fraction;
    e.diagnostics = manifest.diagnostics.clone();
    e.warnings = manifest.warnings.clone();
    Ok((e, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_records_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Ensemble::new("dkrv", 7, vec!["a".into(), "b".into()]);
        for i in 0..10u64 {
            let x = (i as f64 * 0.1).sin() / 3.0;
            e.records.push(EnsembleRecord { seed: i, weight: 1.0 + x, field_shift: -x, log_total: x * 1e-300, observables: vec![x, 1.0 - x] });
        }
        e.acceptance = Some(AcceptanceStats { attempts: 30, accepted: 10 });
        let fp = Fingerprints { config: "c".into(), probes: "p".into(), grid: "g".into() };
        let p = write_ensemble(dir.path(), "ens", &e, &fp).unwrap();
        let (back, m) = read_ensemble(&p).unwrap();
        assert_eq!(back.records, e.records);
        assert_eq!(m.fingerprints, fp);
        assert_eq!(m.acceptance_rate, Some(1.0 / 3.0));
        // tampering is detected
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.push(b'\n');
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(read_ensemble(&p), Err(Error::Format(_))));
    }
}
