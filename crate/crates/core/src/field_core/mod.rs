//! Grids, field samples, background measures and Gaussian free field samplers.

mod background;
mod circle;
mod cylinder;
mod dirichlet;
mod field;
mod grid;

pub use background::{spherical_density, BackgroundKind, BackgroundMeasure};
pub use circle::{circle_average, circle_point_count, circle_weights, MIN_CIRCLE_POINTS};
pub use cylinder::{
    angular_covariance, angular_mode_count, angular_variance, brownian_rows, radial_angular_split, sample_angular_gff,
    AngularBoundary, AngularSampler, RadialAngularSplit, WholePlaneCylinderSampler,
};
pub use dirichlet::{
    disk_green, pin_to_background, sample_dirichlet_gff, sample_pinned_whole_plane_gff, sample_pinned_with,
    DirichletSampler,
};
pub use field::{Field, Pinning};
pub use grid::{CylinderGrid, Geometry, PlanarGrid, MIN_CYLINDER_NTHETA, MIN_PLANAR_RESOLUTION};
