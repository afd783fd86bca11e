//! Multichannel frequency estimation by structured matrix embedding and recovery.
//!
//! A multichannel spectral-sparse signal `X = A(f) S` (N samples, L channels,
//! K common frequencies) is embedded into L low-rank positive-semidefinite
//! block matrices
//!
//! ```text
//! [ T(conj t_l)   H(conj x_l) ]
//! [ H(x_l)        T(t)        ]      with  sum_l t_l = L t,
//! ```
//!
//! built from Hankel lifts of the channels and Hermitian Toeplitz lifts of
//! shared/per-channel coefficient vectors. The estimator recovers these blocks
//! with ADMM under a noise-adapted data-fit objective (Frobenius, entrywise
//! `l_p`, or row-wise `l_{2,p}`, each optionally masked for missing data) and
//! reads the frequencies off the recovered Toeplitz matrix with Root-MUSIC.
//!
//! Module map:
//! - [`structured_ops`]: Hankel/Toeplitz lifts, adjoints and rank-K PSD projection
//! - [`signal_model`]: signal synthesis, noise, masks, observations, embedding certificate
//! - [`prox`]: proximity operators of `|.|^p` and row `l_2` norms
//! - [`solver`]: the ADMM itself
//! - [`toeplitz_baseline`]: the un-embedded Toeplitz-model ADMM, kept for comparison
//! - [`postprocess`]: Root-MUSIC, Vandermonde powers, amplitudes, RMSE
//! - [`reduction`]: `L >> N` dimensionality reduction for Gaussian objectives
//! - [`model_order`]: AIC/BIC order selection
//! - [`crb`]: deterministic Cramér-Rao bound with missing data
//! - [`harness`]: Monte Carlo experiments, presets and result tables
//! - [`scenario`]: JSON documents for scenarios and estimates

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod crb;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model_order;
pub mod postprocess;
pub mod prox;
pub mod reduction;
pub mod scenario;
pub mod signal_model;
pub mod solver;
pub mod structured_ops;
pub mod toeplitz_baseline;

pub use error::{Result, StrumerError};
pub use faer::c64;

/// Dense complex matrix used throughout the crate.
pub type CMat = faer::Mat<c64>;
