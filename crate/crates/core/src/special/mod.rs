//! Special functions used by the SOAP expansion.

mod bessel;
mod harmonics;
mod quadrature;

pub use bessel::scaled_modified_spherical_bessel;
pub use harmonics::{lm_index, RealSphericalHarmonics, MAX_DEGREE};
pub use quadrature::GaussLegendre;
