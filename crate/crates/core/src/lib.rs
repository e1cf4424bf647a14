//! Critical behaviours of Painleve VI transcendents near the fixed
//! singularities `x = 0, 1, inf`.
//!
//! The crate covers parameter conventions, monodromy trace coordinates on
//! the Fricke cubic, the Okamoto symmetries, an order-by-order series engine
//! for every tabulated behaviour class, the Shimomura and elliptic
//! representations, asymptotic pole lattices and an adaptive complex ODE
//! integrator used as an independent oracle.

pub mod elliptic;
pub mod error;
pub mod ext;
pub mod lattice;
pub mod monodromy;
pub mod ode;
pub mod params;
pub mod poles;
pub mod residual;
pub mod series;
pub mod shimomura;
pub mod special;
pub mod symmetry;

pub use error::{Error, Result};
pub use monodromy::{ExponentSigma, MonodromyData};
pub use num_complex::Complex64;
pub use params::{PviParameters, Theta};
pub use series::{BranchExpansion, ClassTag};
pub use symmetry::SymmetryOp;

/// Shorthand for the complex scalar used throughout.
pub type C64 = Complex64;

/// Convenience constructor for a complex number.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The fixed singular points of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CriticalPoint {
    Zero,
    One,
    Infinity,
}
