pub mod calibration;
pub mod chaos;
pub mod dkrv;
pub mod dms;
pub mod ensemble;
pub mod equivalence;
pub mod error;
pub mod field_core;
pub mod io;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
