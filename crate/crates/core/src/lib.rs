//! Changepoint localisation for high-dimensional linear regression.
//!
//! The regression coefficients may be dense before and after each change; only
//! the *difference* is assumed sparse. Every estimator here works on a
//! complementary sketch of the data: projecting onto the orthogonal complement
//! of the design's column space removes the dense nuisance component, after
//! which a changepoint shows up as a CUSUM-shaped bump in a sequence of
//! per-time correlation statistics.
//!
//! Layout:
//!
//! - [`linalg`]: dense kernels (complement basis, thresholding, power
//!   iteration, coordinate-descent Lasso).
//! - [`sketch`]: the sketch itself and the streamed statistic matrix.
//! - [`single`]: single-changepoint estimators, the existence test and its
//!   Monte-Carlo threshold calibration.
//! - [`multi`]: narrowest-over-threshold segmentation with pruning and
//!   two-stage refinement.
//! - [`simulate`]: synthetic data, evaluation metrics and the benchmark runner.

pub mod error;
pub mod linalg;
pub mod multi;
pub mod rng;
pub mod simulate;
pub mod single;
pub mod sketch;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use sketch::{QMatrix, RegressionData, SketchedData, Variant};
