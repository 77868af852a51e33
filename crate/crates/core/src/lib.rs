//! Limits of minor inverses and next-generation matrices.
//!
//! Sending a diagonal entry `a_ii` of a square matrix to infinity turns the
//! inverse into the inverse of the `(i, i)` minor, bordered by a zero row and
//! column. The same limit applied to the transfer block `V` of a
//! next-generation pair removes a compartment from `R0 = ρ(F V⁻¹)`. The
//! [`relapse`] module uses this to relate reproduction numbers of relapsing
//! vector-borne disease models with different numbers of relapse stages.

#![allow(clippy::needless_range_loop)]

pub mod densela;
pub mod eigen;
pub mod error;
pub mod minorlimit;
pub mod ngm;
pub mod relapse;

pub use densela::Matrix;
pub use eigen::{eigenvalues, spectral_abscissa, spectral_radius, Spectrum};
pub use error::{Error, Result};
pub use minorlimit::{ConvergenceReport, DiagonalRay, PointFlag, SamplePoint, SpectralLimit};
pub use ngm::{NgmPair, ThresholdReport};
pub use relapse::{HostParams, R0Method, R0Result, VectorParams};

pub use num_complex::Complex64;
