//! Dyadic harmonic analysis on a finite model of `[0,1)^n`.
//!
//! Step functions on the cells of depth `D` carry the Haar basis, weights,
//! sparse collections and the paraproduct family. Every identity between these
//! operators is exact in [`Exact`] arithmetic; inequalities and operator norms
//! are computed in `f64`.

pub mod domination;
pub mod dyadic;
pub mod error;
pub mod io;
pub mod norms;
pub mod paraproducts;
pub mod report;
pub mod scalar;
pub mod sparse;
pub mod weights;

pub use dyadic::{
    haar_function, CubeId, CubeMap, DyadicModel, HaarSpectrum, Signature, StepFunction,
};
pub use error::{Error, Result};
pub use scalar::{Exact, Scalar, ScalarMode};
