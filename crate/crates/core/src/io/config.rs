//! TOML run configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::chaos::{default_probes, Probe, DEFAULT_PLANAR_CALIBRATION};
use crate::dkrv::{derive_params, three_point_insertions, Insertion, LqgParams};
use crate::equivalence::{ConditioningMethod, SchemeConfig};
use crate::error::{Error, Result};
use crate::field_core::{BackgroundKind, CylinderGrid};
use crate::stats::TestOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub grid: GridSection,
    pub dkrv: DkrvSection,
    pub dms: DmsSection,
    pub scheme: SchemeSection,
    pub compare: CompareSection,
    pub calibration: CalibrationSection,
    /// Observables; the default set when empty.
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Angular cells of cylinder grids (cells are square).
    pub n_theta: usize,
    /// Cylinder window `[t_min, t_max]` of the whole-sphere pipelines.
    pub t_min: f64,
    pub t_max: f64,
    pub planar_resolution: usize,
    pub planar_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DkrvSection {
    pub gamma: f64,
    /// Insertions; three `γ`-insertions at `0, 1, ∞` when empty.
    pub insertions: Vec<Insertion>,
    pub background: BackgroundKind,
    pub n: usize,
    /// Fraction of the sample size below which a low ESS is flagged.
    pub ess_floor_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmsSection {
    pub gamma: f64,
    pub c_ladder: Vec<f64>,
    pub delta: f64,
    pub n: usize,
    pub max_attempts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    /// Cells per side; chosen from `epsilon` when 0.
    pub resolution: usize,
    pub enforce_h: bool,
    pub method: ConditioningMethod,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub resamples: usize,
    pub significance: f64,
    pub min_ess: f64,
    /// Self-comparisons used for the null calibration.
    pub null_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub planar_calibration: f64,
    pub draws: usize,
    /// Grid of the covariance calibration on the unit disk.
    pub resolution: usize,
    pub covariance_tolerance: f64,
    /// Domain scales of the circle-average variance check.
    pub epsilons: Vec<f64>,
    pub circle_cells_per_unit: usize,
    pub variance_tolerance: f64,
    /// Chaos expectation check: `γ`, disk radius and z-score bound.
    pub gmc_gamma: f64,
    pub gmc_radius: f64,
    pub max_z: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: PathBuf::from("lqg-out"),
            threads: 0,
            grid: GridSection::default(),
            dkrv: DkrvSection::default(),
            dms: DmsSection::default(),
            scheme: SchemeSection::default(),
            compare: CompareSection::default(),
            calibration: CalibrationSection::default(),
            probes: Vec::new(),
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_theta: 64, t_min: -20.0, t_max: 20.0, planar_resolution: 128, planar_radius: 1.0 }
    }
}

impl Default for DkrvSection {
    fn default() -> Self {
        DkrvSection {
            gamma: 2f64.sqrt(),
            insertions: Vec::new(),
            background: BackgroundKind::Spherical,
            n: 500,
            ess_floor_fraction: 0.1,
        }
    }
}

impl Default for DmsSection {
    fn default() -> Self {
        DmsSection { gamma: 2f64.sqrt(), c_ladder: vec![1.0, 2.0, 3.0], delta: 0.3, n: 500, max_attempts: 2_000_000 }
    }
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            gamma: 2f64.sqrt(),
            epsilon: 1.0 / 16.0,
            delta: 0.3,
            z1: [0.0, 0.0],
            z2: [1.0, 0.0],
            resolution: 0,
            enforce_h: true,
            method: ConditioningMethod::default(),
            n: 500,
        }
    }
}

impl Default for CompareSection {
    fn default() -> Self {
        let t = TestOptions::default();
        CompareSection { resamples: t.resamples, significance: t.significance, min_ess: t.min_ess, null_repeats: 50 }
    }
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            planar_calibration: DEFAULT_PLANAR_CALIBRATION,
            draws: 2000,
            resolution: 128,
            covariance_tolerance: 0.05,
            epsilons: vec![1.0 / 16.0, 1.0 / 32.0],
            circle_cells_per_unit: 4,
            variance_tolerance: 0.05,
            gmc_gamma: 1.0,
            gmc_radius: 0.5,
            max_z: 3.0,
        }
    }
}

impl RunConfig {
    /// Parses and validates; unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.dkrv_params()?;
        if self.dkrv.background == BackgroundKind::Custom {
            return Err(Error::Config("custom backgrounds cannot be configured from a file".into()));
        }
        self.cylinder_grid()?;
        self.scheme_config().validate()?;
        let d = &self.dms;
        crate::chaos::check_gamma(d.gamma).map_err(|e| Error::Config(e.to_string()))?;
        if d.c_ladder.is_empty() || d.c_ladder.iter().any(|c| !(*c > 0.0)) || !(d.delta > 0.0) {
            return Err(Error::Config("dms needs a non-empty positive C ladder and delta > 0".into()));
        }
        let c = &self.compare;
        if c.resamples == 0 || !(c.significance > 0.0 && c.significance < 1.0) {
            return Err(Error::Config("compare needs resamples > 0 and significance in (0, 1)".into()));
        }
        let cal = &self.calibration;
        if !(cal.planar_calibration > 0.0) {
            return Err(Error::Config("planar calibration constant must be positive".into()));
        }
        if cal.draws < 2
            || cal.resolution < crate::field_core::MIN_PLANAR_RESOLUTION
            || cal.circle_cells_per_unit == 0
            || cal.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0))
            || !(cal.gmc_radius > 0.0 && cal.gmc_radius <= 1.0)
        {
            return Err(Error::Config("invalid calibration section".into()));
        }
        crate::chaos::check_gamma(cal.gmc_gamma).map_err(|e| Error::Config(e.to_string()))?;
        if self.grid.planar_resolution < crate::field_core::MIN_PLANAR_RESOLUTION || !(self.grid.planar_radius > 0.0) {
            return Err(Error::Config("invalid planar grid".into()));
        }
        Ok(())
    }

    pub fn dkrv_params(&self) -> Result<LqgParams> {
        let g = self.dkrv.gamma;
        let ins = if self.dkrv.insertions.is_empty() { three_point_insertions(g) } else { self.dkrv.insertions.clone() };
        derive_params(g, &ins).map_err(|e| Error::Config(e.to_string()))
    }

    /// Aligned cylinder covering the configured window.
    pub fn cylinder_grid(&self) -> Result<CylinderGrid> {
        if !(self.grid.t_min < 0.0 && self.grid.t_max > 0.0) {
            return Err(Error::Config("the cylinder window must contain t = 0".into()));
        }
        CylinderGrid::aligned_covering(self.grid.t_min, self.grid.t_max, self.grid.n_theta)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let s = &self.scheme;
        let mut c = SchemeConfig::new(s.gamma, s.epsilon, s.delta);
        c.z1 = s.z1;
        c.z2 = s.z2;
        if s.resolution > 0 {
            c.resolution = s.resolution;
        }
        c.enforce_h = s.enforce_h;
        c.method = s.method;
        c
    }

    pub fn probes(&self) -> Vec<Probe> {
        if self.probes.is_empty() {
            default_probes()
        } else {
            self.probes.clone()
        }
    }

    pub fn test_options(&self) -> TestOptions {
        TestOptions {
            resamples: self.compare.resamples,
            significance: self.compare.significance,
            min_ess: self.compare.min_ess,
            seed: crate::rng::derive_root(self.seed, "compare"),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// SHA-256 of the probe definitions, in order.
pub fn probe_fingerprint(probes: &[Probe]) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(probes).expect("probes serialize")))
}
