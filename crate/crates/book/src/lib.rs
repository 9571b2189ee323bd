//! Compiles the code listings of the guide in `book/` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/sparseness.md")]
pub mod sparseness_measure {}

#[doc = include_str!("../../../book/src/projection.md")]
pub mod projection {}

#[doc = include_str!("../../../book/src/gradients.md")]
pub mod gradients {}

#[doc = include_str!("../../../book/src/autoencoder.md")]
pub mod autoencoder {}

#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
