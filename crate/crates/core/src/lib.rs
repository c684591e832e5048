//! Gradient-based optimal control of unitary gates in open quantum systems.

pub mod algebra;
pub mod error;
pub mod experiments;
pub mod grape;
pub mod lie;
pub mod numerics;
pub mod propagation;
pub mod relaxation;
pub mod systems;
pub mod trotter;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex matrix in double precision.
pub type CMat = numerics::CMatrix<f64>;
/// Complex vector in double precision.
pub type CVec = numerics::CVector<f64>;
/// Real matrix in double precision.
pub type RMat = nalgebra::DMatrix<f64>;
/// Complex double.
pub type C64 = num_complex::Complex64;
