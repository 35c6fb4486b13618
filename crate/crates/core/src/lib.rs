//! Polarimetric guided nonlocal means (PGNLM) speckle filtering for
//! quad-pol SAR, together with the pieces needed to evaluate it:
//! synthetic speckled scenes, a boxcar baseline, polarimetric feature
//! extraction and a random-forest classifier with stratified k-fold
//! cross-validation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! multi-threaded drivers live in the `pgnlm` companion crate; everything
//! here is exposed at row/pixel/tree granularity so that a driver can
//! split work across threads without changing results.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod classify;
pub mod cov;
pub mod error;
pub mod features;
pub mod grid;
pub mod metrics;
pub mod pgnlm;
pub mod rng;
pub mod simulate;

pub use cov::{ComplexSample, HermitianCov3, ScatteringVector};
pub use error::{Error, Result};
pub use grid::{CovGrid, Grid, LabelGrid, OpticalGrid, SlcGrid};
pub use pgnlm::FilterParams;
