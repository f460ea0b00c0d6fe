#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extension;
pub mod harness;
pub mod multiplier;
pub mod riesz;
pub mod scalar;
pub mod spectrum;
pub mod torus;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SampledFunction64 = torus::SampledFunction<f64>;
pub type SpectralVector64 = torus::SpectralVector<f64>;
pub type AtomicMeasure64 = torus::AtomicMeasure<f64>;
pub type Transform64 = torus::Transform<f64>;
pub type RieszProduct64 = riesz::RieszProduct<f64>;
pub type ExtensionSolution64 = extension::ExtensionSolution<f64>;

pub type SampledFunction32 = torus::SampledFunction<f32>;
pub type SpectralVector32 = torus::SpectralVector<f32>;
pub type AtomicMeasure32 = torus::AtomicMeasure<f32>;
pub type Transform32 = torus::Transform<f32>;
pub type RieszProduct32 = riesz::RieszProduct<f32>;
pub type ExtensionSolution32 = extension::ExtensionSolution<f32>;
