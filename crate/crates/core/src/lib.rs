//! Numerics for neural-network-based estimation of mode-dependent gain
//! (`σ_mdg`) and optical SNR in strongly coupled space-division multiplexed
//! links.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and an explicitly passed random stream; file
//! formats, parallelism and the command line live in the `mdgnet` crate.
//!
//! Layout, bottom-up:
//!
//! * [`linalg`]: small dense complex matrices, Hermitian eigensolver,
//!   inversion and Haar-unitary sampling.
//! * [`channel`]: multisection random channel model and the `σ_mdg` statistic.
//! * [`mmse`]: closed-form MMSE equalizer, per-stream SINR and the
//!   conventional estimators.
//! * [`oracle`]: symbol-level Monte Carlo transmission with a
//!   single-coefficient least-squares SINR estimator.
//! * [`dataset`]: labelled feature generation, split and standardization.
//! * [`mlp`]: the 12→6→1 regression network, backprop and Adam training.
//! * [`grid`]: held-out MSE and signed-error surfaces over (`σ_mdg`, SNR).
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod dataset;
mod error;
pub mod grid;
pub mod linalg;
pub mod mlp;
pub mod mmse;
pub mod oracle;
pub mod seed;
pub mod units;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};

/// Spatial modes of the reference link (LP01, LP11a, LP11b).
pub const SPATIAL_MODES: usize = 3;
/// Data streams: two polarizations per spatial mode.
pub const STREAMS: usize = 2 * SPATIAL_MODES;
/// Network input width: one eigenvalue and one SINR per stream.
pub const FEATURES: usize = 2 * STREAMS;
