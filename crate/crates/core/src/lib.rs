//! Szegő projection and kernel for `(0,q)`-forms on the Heisenberg group
//! `H_{n+1} = ℂⁿ × ℝ`.
//!
//! The crate evaluates the closed-form kernels, the weighted Bergman
//! projections on `ℂⁿ`, and assembles the projector as a partial Fourier
//! transform along the vertical axis followed by slice-wise Bergman
//! projection. Every identity is cross-checked by an independent numerical
//! route in [`verify`].

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bergman;
pub mod config;
pub mod error;
pub mod fieldio;
pub mod forms;
pub mod kernel_table;
pub mod packet;
pub mod phase;
pub mod quadrature;
pub mod random;
pub mod transform;
pub mod types;
pub mod verify;

pub use error::{Result, SzegoError};
pub use num_complex::Complex64;
pub use types::{
    multiindex_complement, volume_weight, FormField, FrequencySlice, GridSpec, HeisenbergPoint,
    LambdaSignature, MultiIndex, PointIndex, QuadratureRule, ScalarField,
};
