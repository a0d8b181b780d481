//! Simulation and estimation toolkit for trapped-ion force and magnetic
//! gradient sensing with a driven spin-phonon lattice.
//!
//! Internally ħ = 1, frequencies are in krad/s and times in ms. SI inputs
//! are converted at the boundary in [`models`].

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod metrology;
pub mod models;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

/// Operator over `f64` amplitudes.
pub type OperatorMatrix = hilbert::Operator<f64>;
/// State over `f64` amplitudes.
pub type CompositeState = hilbert::State<f64>;
pub type OperatorMatrixF32 = hilbert::Operator<f32>;
pub type CompositeStateF32 = hilbert::State<f32>;
