//! Frequency-band importance for multichannel recordings.
//!
//! Recordings are turned into per-block linear eigenvalue statistics of the
//! spectral covariance. Weak classifiers that each leave out one band vote on
//! every sample, the vote weights are fitted by least squares (optionally on
//! the probability simplex), and the redistributed per-band weights decide how
//! often each band's features are replicated before final classification.

pub mod augment;
pub mod classifiers;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod les;
pub mod numerics;
pub mod qp;
pub mod signal;
pub mod synth;
pub mod voting;

pub use error::{Error, Result};
pub use numerics::Matrix;
