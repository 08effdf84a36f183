//! Saturable global uncertainty (SGU) for quantum sensors.
//!
//! The SGU of a parameter window is the prior-weighted average of the inverse
//! classical Fisher information (CFI), minimized over one fixed measurement
//! setting. It is computed here for
//!
//! - single-mode bosonic Gaussian probes with general-dyne measurements
//!   ([`thermometry`], [`phase`]), on top of the generic Gaussian CFI in
//!   [`gaussian`];
//! - the transverse-field XY chain measured cell by cell in momentum space
//!   ([`fermion`]).
//!
//! [`engine`] holds the generic machinery: priors, adaptive quadrature,
//! measurement-parameter boxes and the grid + golden-section minimizer.
//!
//! Units: hbar = k_B = omega = 1; covariance matrices use the vacuum = identity
//! convention.

// Negated float comparisons below are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod fermion;
pub mod gaussian;
pub mod phase;
pub mod thermometry;

pub use engine::{
    average_inverse_cfi, global_bound, minimize_sgu, sgu_with_nuisance, AverageEstimate, Axis,
    AxisKind, MeasurementSpace, MinimizeOptions, Prior, QuadConfig, SguResult,
};
pub use error::{Result, SguError};
pub use gaussian::{GaussianState, GeneralDyneMeasurement, ParametrizedFamily};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
