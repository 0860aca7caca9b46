//! Nonlocal MMSE denoising for images whose pixels live on a Riemannian
//! manifold.
//!
//! The crate covers the full pipeline: geometric primitives (exponential
//! and logarithm maps, distances, orthonormal tangent bases) for the
//! circle, the 2-sphere, SPD(2) and SPD(3) matrices with the affine
//! invariant metric, the open 1-simplex with the Fisher-Rao metric, the
//! hyperbolic plane, and flat Euclidean space; intrinsic statistics
//! (Karcher means, tangent covariance, MMSE shrinkage); tangent-space and
//! Said-et-al. noise models with seeded reproducible streams; the
//! two-step patch-based denoiser with its flat specialization and a
//! nonlocal-means baseline; plus synthetic image generators, a small
//! binary image container, and deterministic SVG/PPM rendering.
//!
//! Images are dense row-major grids of ambient coordinates. Everything
//! downstream of a seed is bit-reproducible, independent of thread count.

// Comparisons written as `!(x > 0.0)` are deliberate: they reject NaN
// along with the out-of-range values. The pipeline internals pass their
// scalar knobs individually on purpose; bundling them hides which step
// uses what.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::manual_range_contains)]

pub mod denoise;
pub mod error;
pub mod geometry;
pub mod image;
pub mod io;
pub mod manifold;
pub mod noise;
pub mod render;
pub mod stats;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use image::ManifoldImage;
pub use manifold::{Manifold, Point, ProductPoint};

pub use denoise::{
    euclidean::nlmmse_flat,
    mse,
    nlmeans::{nlmeans, NlMeansParams},
    nlmmse, DenoiseParams,
};
pub use noise::{add_noise, NoiseModel, NoiseSpec, RngState, StreamKind};
pub use stats::{empirical_covariance, karcher_mean, pooled_variance, KarcherConfig, Shrinkage};
