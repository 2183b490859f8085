//! Simulation and exact computation for the historical Moran model.
//!
//! The crate covers the forward process of extended ancestral lines, the
//! backward process with its Feynman-Kac weight and h-transforms, exact
//! small-`N` generators, and the two-type reduced chains for the common
//! ancestor type and for genealogical distances.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod backward;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod forward;
pub mod linalg;
pub mod lines;
pub mod moments;
pub mod params;
pub mod reduced;
pub mod rng;
pub mod stationary;
pub mod transformed;

pub use error::{Error, Result};
pub use params::{validate_params, ModelParams, Site, Type};
