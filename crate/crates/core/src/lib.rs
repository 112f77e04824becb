//! Simulation and verification of cluster-state construction and one-way
//! computation on exchange-coupled quantum dots, with bare, two-dot and
//! four-dot supercoherent logical qubits.

pub mod cluster;
pub mod encodings;
pub mod error;
pub mod errorlab;
pub mod linalg;
pub mod mbqc;
pub mod model;
pub mod scalar;
pub mod scenario;
pub mod statevec;
pub mod synthesis;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision complex amplitude.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision state vector.
pub type State = statevec::QuantumState<f64>;
/// Single-precision state vector.
pub type State32 = statevec::QuantumState<f32>;
pub type Operator = statevec::LocalOperator<f64>;
pub type Matrix = linalg::CMat<f64>;
pub type Model = model::CouplingModel<f64>;
