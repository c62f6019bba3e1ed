//! Liouville field with insertions and the reweighted unit-volume measure.

mod liouville;
mod mobius;
mod params;

pub use liouville::{
    dkrv_unit_volume_sample, liouville_singular_part, DkrvSampler, InsertionRule, LiouvilleField,
    WeightedMeasureSample,
};
pub use mobius::{mobius_field, mobius_measure, Mobius, Transformed};
pub use params::{
    check_bounds, derive_params, three_point_insertions, BoundReport, BoundStatus, Insertion, InsertionPoint,
    LqgParams,
};
