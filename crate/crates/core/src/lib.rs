//! Illuminant estimation from derivative colors.
//!
//! The crate renders dichromatic test scenes ([`synth`]), filters images
//! with difference and Gaussian second-derivative operators ([`filters`]),
//! estimates the light color from the chromaticities of filter responses in
//! bright regions ([`dcs`]), provides the Minkowski-norm gray-family
//! estimators for comparison ([`baselines`]) and the angular-error
//! statistics and sign tests used to compare them ([`eval`]).

pub mod baselines;
pub mod color;
pub mod dataset;
pub mod dcs;
pub mod error;
pub mod eval;
pub mod filters;
pub mod raster;
pub mod synth;

pub use color::{ChromaticityPoint, Illuminant};
pub use dcs::{estimate, DcsEstimate, DcsParams};
pub use error::{Error, Result};
pub use raster::{BinaryMask, BitDepth, LinearImage};
