pub mod affine_group;
pub mod error;
pub mod halfosc;
mod numdiff;
pub mod quadrature;
pub mod phase_space;
pub mod quantize;
pub mod representation;
pub mod scalar;
pub mod specfun;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision group element.
pub type GroupElementF64 = affine_group::GroupElement<f64>;
