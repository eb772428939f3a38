//! Offline signature identification.
//!
//! The pipeline runs in five stages, one module each:
//!
//! * [`raster`]: geometric normalization, denoising, Otsu binarization,
//!   Zhang–Suen thinning and high-pressure-region extraction.
//! * [`featex`]: 27 global features plus 11 local features for each cell of a
//!   5×5 grid, concatenated into a 302-slot [`featex::FeatureVector`].
//! * [`matchers`]: per-subject statistics and three matchers (weighted
//!   Euclidean, Mahalanobis, Gaussian empirical rule count).
//! * [`svmfuse`]: an SMO-trained kernel SVM over normalized score triples,
//!   reduced-set pruning of dependent support vectors and the fused score.
//! * [`evalkit`]: the enrollment/probe protocol, subject ranking, CMC curves
//!   and a seeded synthetic signature corpus.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evalkit;
pub mod featex;
pub mod matchers;
pub mod raster;
pub mod svmfuse;

pub use error::{Error, Result};
