//! Benchmark harness core for machine-learning force fields.

// Negated comparisons are the NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod dataset;
pub mod fixtures;
pub mod linalg;
pub mod metrics;
pub mod protocol;
pub mod scalar;
pub mod soap;
pub mod special;
pub mod synthetic;

pub use scalar::Scalar;

pub type SoapParamsF64 = soap::SoapParams<f64>;
pub type SoapParamsF32 = soap::SoapParams<f32>;
pub type SoapCalculatorF64 = soap::SoapCalculator<f64>;
pub type SoapCalculatorF32 = soap::SoapCalculator<f32>;
pub type ReferenceFitF64 = fixtures::ReferenceFit<f64>;
pub type ReferenceFitF32 = fixtures::ReferenceFit<f32>;
