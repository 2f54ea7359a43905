//! Gangolli operators and spherical Lévy processes on the 2-sphere
//! `S² = SO(3)/SO(2)`.
//!
//! * [`geometry`]: quaternion rotations, exponential and logarithm maps,
//!   canonical coordinates and `Ad(K)` on the tangent plane at the pole.
//! * [`spectral`]: Legendre functions, zonal functions and the spherical
//!   transform.
//! * [`levy`]: zonal Lévy measures, jump kernels and the symbol `η`.
//! * [`operators`]: direct, spectral and Courrège evaluation, the maximum
//!   principle, Schur reduction and invariance checks.
//! * [`semigroup`]: constant-coefficient semigroups and path simulation.

pub mod fields;
pub mod geometry;
pub mod levy;
pub mod operators;
pub mod quadrature;
pub mod random;
pub mod semigroup;
pub mod spectral;

pub use fields::{DriftField, MatrixField, ZonalField};
pub use geometry::{GroupElement, LieVector, SpherePoint};
pub use levy::{LevyKernel, ZonalLevyMeasure};
pub use operators::{GangolliCoefficients, GangolliOperator, OperatorError};
pub use semigroup::{LevyProcessParams, PathEndpointSample};
pub use spectral::{SphericalWeight, ZonalFunction};
