//! Disk approximation scheme, ensemble comparison, and the Fubini self-test.

mod compare;
mod fubini;
mod scheme;

pub use compare::{background_independence_test, compare_ensembles, null_calibration, ComparisonReport, NullCalibration};
pub use fubini::{fubini_selftest, FubiniReport, FubiniSpec};
pub use scheme::{
    default_resolution, epsilon_ladder, scheme_sample, ConditioningMethod, EpsilonLadder, EventFlags, SchemeConfig, SchemeDraw, SchemeField, SchemeSampler,
};
