//! Quantum-trajectory simulation of a cavity pumped by opposite-phase atomic
//! dipoles: squeezed-vacuum formation, photon-subtraction heralding of
//! cat-like states, and their restoration and decoherence.
//!
//! State-vector algebra ([`hilbert`], [`refstates`]) is generic over the real
//! scalar (`f32` or `f64`); the stochastic engine, oracles and analysis run in
//! `f64`. Concrete aliases for the common types live at the crate root.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod expcalc;
pub mod hilbert;
pub mod oracle;
pub mod refstates;
pub mod scalar;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FieldState = hilbert::FieldState<f64>;
pub type FieldStateF32 = hilbert::FieldState<f32>;
pub type JointState = hilbert::JointState<f64>;
pub type JointStateF32 = hilbert::JointState<f32>;
pub type DensityMatrix = hilbert::DensityMatrix<f64>;
pub type FieldDensityMatrix = hilbert::FieldDensityMatrix<f64>;
pub type Operator = hilbert::LinearOperatorRep<f64>;
pub type Complex64 = num_complex::Complex<f64>;
