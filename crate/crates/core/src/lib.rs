//! Exact-diagonalization toolkit for out-of-time-order correlators in the
//! quantum Rabi and Dicke models.
//!
//! Build a [`ModelSpec`], turn a coupling ratio into a Hamiltonian, diagonalize
//! it once with [`prepare_frame`] and sample correlators on a [`TimeGrid`].
//! The [`analysis`] module scans couplings and fits scaling laws.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod correlators;
pub mod dynamics;
pub mod error;
pub mod hermit;
pub mod models;
pub mod operators;
pub mod regression;

pub use correlators::{CorrelatorKind, TimeGrid, TimeSeries};
pub use dynamics::{prepare_frame, EvolvedFrame, ThermalWeights};
pub use error::{Error, Result};
pub use hermit::{ComplexMatrix, HermitianOperator, SpectralDecomposition};
pub use models::{ModelKind, ModelParams, ModelSpec};
pub use num_complex::Complex64;
pub use operators::{BosonCutoff, SpinLength};
