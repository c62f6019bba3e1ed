//! Quantum spheres with two and three marked points.

mod hitting;
mod radial;
mod sphere;

pub use hitting::{hitting_time_selftest, HittingTimeReport};
pub use radial::{drifted_bessel3, sample_bessel_radial, RadialPath};
pub use sphere::{
    dms_three_point_sample, mobius_normalize, sample_bessel_sphere, sample_limiting_sphere, sample_quantum_point,
    Embedding, LimitingSphere, MarkedPoint, SphereSample,
};
