//! Lattice Gaussian multiplicative chaos.

mod gmc;
mod measure;
mod moments;
mod probes;
mod tail;

pub use gmc::{
    base_log_mass, calibrate_planar_constant, check_gamma, expected_disk_mass, gmc_measure, gmc_measure_with,
    liouville_q, Regularization, SingularPart, SingularTerm, DEFAULT_PLANAR_CALIBRATION,
};
pub use measure::Measure;
pub use moments::{moment_admissible, moment_estimate, moment_from_log_totals, moment_threshold, MomentEstimate};
pub use probes::{default_probes, observable_vector, Probe, Region, ResolvedProbes};
pub use tail::{annulus_masses, tail_truncation, TailEstimate, TailLimits};
