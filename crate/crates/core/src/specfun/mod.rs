//! Special functions: gamma, classical orthogonal polynomials, modified Bessel functions.

mod bessel;
mod gamma;
mod orthopoly;

pub use bessel::{bessel, bessel_i_scaled, bessel_ik_scaled, bessel_k_scaled, BesselKind};
pub use gamma::{gamma, ln_gamma, ln_gamma_ratio};
pub use orthopoly::{
    hermite, hermite_function, hermite_function_deriv, hermite_functions_upto, jacobi,
    jacobi_upto, laguerre, laguerre_function, laguerre_functions_upto, orthopoly_eval, PolyFamily,
};

/// Γ(x); alias kept for the operation name used across the crate.
pub use gamma::gamma as gamma_fn;
