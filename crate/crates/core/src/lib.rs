//! Affine sparse subspace clustering (ASSC).
//!
//! The crate solves the per-point ℓ1 programs behind sparse subspace
//! clustering, in both the linear (SSC) and the affine (ASSC) flavour, builds
//! the induced affinity and clusters it spectrally. Alongside the pipeline it
//! ships a certificate engine that evaluates the geometric conditions under
//! which ASSC representations are provably subspace-preserving, so that a
//! concrete dataset can be checked mechanically instead of by inspection.
//!
//! Module map:
//!
//! * [`numerics`]: rank, eigendecomposition, soft thresholding, a dense
//!   simplex LP solver and a least-norm QP over an LP's optimal face.
//! * [`model`]: point sets, labels, affine subspaces, homogeneous embedding.
//! * [`geometry`]: affine arrangement predicates and convex-hull face
//!   classification.
//! * [`solvers`]: ADMM and LP-oracle column solvers, dual points, λ rule.
//! * [`certificates`]: subspace-preserving checks and correctness verdicts.
//! * [`clustering`]: affinity, spectral clustering, clustering error.
//! * [`datagen`]: the toy datasets and random arrangement generators.

pub mod certificates;
pub mod clustering;
pub mod datagen;
mod error;
pub mod geometry;
pub mod model;
pub mod numerics;
pub mod solvers;

pub use error::{Error, Result};
