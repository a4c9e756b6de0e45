//! The finite dyadic model: cubes, step functions and the Haar basis.

mod haar;
mod model;
mod step;

pub use haar::{haar_function, inv_sqrt_volume, HaarSpectrum};
pub(crate) use model::sign_on_child;
pub use model::{CubeId, CubeMap, DyadicModel, Signature, MAX_CELL_BITS, MAX_DIM};
pub use step::StepFunction;
