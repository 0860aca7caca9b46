//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of geometry, statistics, denoising, and file handling.
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched dimensions, descriptors, or matrix shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input outside the mathematical domain of an operation
    /// (arccos overshoot beyond slack, boundary of the open simplex,
    /// non-positive variance, Said sampler with sigma^2 >= 1/(r-1), ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The logarithmic map was requested at a point of the cut locus
    /// (for example the antipode on a sphere). `item` is the index of the
    /// offending point within the processed sequence (0 for single-point
    /// operations), `component` the offending component of a product point.
    #[error("cut locus: log undefined (item {item}, component {component})")]
    CutLocus { item: usize, component: usize },

    /// Karcher mean gradient descent did not reach the tolerance.
    #[error("Karcher mean did not converge after {iters} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iters: usize, grad_norm: f64 },

    /// A decoded or constructed pixel violates its manifold constraints.
    #[error("invalid pixel at index {index}: {detail}")]
    InvalidPixel { index: usize, detail: String },

    /// Malformed binary image file.
    #[error("parse error at byte {offset}: {detail}")]
    Parse { offset: u64, detail: String },

    /// Unknown synthetic generator name.
    #[error("unknown generator '{0}'")]
    UnknownGenerator(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
