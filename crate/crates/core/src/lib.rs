//! Sparseness-enforcing projections for Hoyer's sparseness measure.
//!
//! The crate computes exact Euclidean projections onto the sets of vectors
//! with prescribed L1 and L2 norms (equivalently, prescribed sparseness),
//! differentiates them almost everywhere, and uses them as the hidden-layer
//! transfer function of a supervised online auto-encoder.
//!
//! - [`sigma()`] and [`SparseTarget`] describe the constraint.
//! - [`project_nonneg`], [`project_unrestricted`], [`project_scale_free`] and
//!   [`project_l0`] compute projections; [`geometry`] exposes the pieces.
//! - [`gradient`] turns a [`ProjectionTrace`] into derivative products.
//! - [`baseline`] and [`reference`] hold slower algorithms used for comparison.
//! - [`soae`], [`mnist`] and [`checkpoint`] implement the learning application.

pub mod baseline;
pub mod checkpoint;
pub mod error;
pub mod geometry;
pub mod gradient;
pub mod linalg;
pub mod mnist;
pub mod projection;
pub mod reference;
pub mod sigma;
pub mod soae;

pub use error::{Error, Result};
pub use projection::{
    project_l0, project_nonneg, project_scale_free, project_unrestricted, IterationRecord,
    ProjectionResult, ProjectionTrace,
};
pub use sigma::{sigma, target_for_sigma, SparseTarget};
