//! Non-Hermitian tight-binding lattice toolkit.
//!
//! Builds Bloch Hamiltonians from a small model-description language and
//! analyzes their non-Hermitian physics: equal-frequency contours with
//! decay-rate (dynamical degeneracy) splitting, impurity-line scattering
//! classified as conventional or anomalous through pole partitions and
//! spectral winding numbers, Gaussian wave-packet dynamics exhibiting
//! directional invisibility, and open-boundary spectra with
//! frequency-resolved skin-mode densities.

pub mod dsl;
pub mod dynamics;
pub mod efc;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod scatter;
pub mod spectra;

pub use dsl::{lower_expression, parse_model_file, ModelSpec};
pub use error::{Error, ErrorClass, Result};
pub use fourier::FourierSeries;
pub use geometry::{LatticeGeometry, Shape};
pub use model::{builtin, builtin_spec, BandSet, BandSymmetry, BlochModel, BUILTIN_NAMES};
