//! Numerical laboratory for weighted quasi-geometric matrix means.
//!
//! The crate computes the Rényi, geometric, spectral geometric (two
//! variants), Log-Euclidean, arithmetic and harmonic quasi-means of positive
//! semidefinite matrices, checks log-majorization relations between them,
//! and evaluates the associated Rényi-type divergences and trace
//! concavity/convexity properties.

pub mod channels;
pub mod convexity;
pub mod divergence;
pub mod equality;
pub mod error;
pub mod majorization;
pub mod means;
pub mod sample;
pub mod relations;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};
pub use means::{compute_mean, MeanKind, MeanResult, MeanSpec};
pub use spectral::{Hermitian, Psd};
