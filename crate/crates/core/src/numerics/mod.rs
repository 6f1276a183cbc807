//! Special functions, root finding and quadrature.

pub mod bessel;
pub mod quad;

pub use bessel::{bessel_j, bessel_j_prime, find_robin_roots, BesselOrder};
