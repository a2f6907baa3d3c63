//! Quantifying how non-linear a density-based topology-optimization problem
//! is, as a single dimensionless index.
//!
//! The pipeline samples an optimizer trajectory ensemble on a chosen problem
//! (multi-start method-of-moving-asymptotes steps with the gradient frozen
//! after a warmup), embeds the sampled designs into the plane by classical
//! multidimensional scaling on cosine distances, triangulates the normalized
//! objective over that embedding, builds the discrete lower convex envelope
//! of the lifted point cloud, and reports the mean surface-to-envelope gap:
//! 0 for convex landscapes, approaching 1 for maximally non-convex ones.
//!
//! Crate layout:
//! - [`mesh`], [`fem`], [`filter`], [`problem`]: regular-grid finite-element
//!   models (plane stress and heat conduction), density filtering, and the
//!   objective/gradient catalogue.
//! - [`mma`], [`sampler`]: the optimizer and the fixed-gradient multi-start
//!   sampling scheme.
//! - [`embedding`], [`hull`], [`landscape`]: distance geometry, the 3D convex
//!   hull, and the surface/envelope/index construction.
//! - [`lft1d`]: a 1D discrete Legendre–Fenchel baseline for comparison.
//! - [`experiment`], [`io`], [`svg`]: end-to-end runs, artifact files, and
//!   plots.
//!
//! Heavy loops run data-parallel via rayon when the `parallel` feature
//! (default) is enabled and [`ExecMode::Parallel`] is selected; a sequential
//! path is always available for reproducibility comparisons.

pub mod embedding;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod filter;
pub mod hull;
pub mod io;
pub mod landscape;
pub mod lft1d;
pub mod mesh;
pub mod mma;
pub mod par;
pub mod problem;
pub mod sampler;
pub mod svg;

pub use error::{Error, Result};
pub use par::ExecMode;
