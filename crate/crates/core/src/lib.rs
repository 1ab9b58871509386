//! Two-valued symmetric circulant (TVSCM) layers.
//!
//! A TVSCM weight matrix is an `n × n` symmetric circulant whose defining
//! vector is built from just two scalars `a` and `b`: alternate them
//! (`[a, b, a, b, …]`), expand into a circulant, then average the result with
//! its transpose. Only `(a, b)` and the `n`-entry defining vector are ever
//! stored.
//!
//! Crate layout:
//!
//! - [`structmat`]: circulant algebra (construction, symmetrization, spectra,
//!   naive and FFT matrix-vector products, mask decomposition).
//! - [`fft`]: mixed-radix / Bluestein complex FFT used by the spectral path.
//! - [`nn`]: TVSCM and dense layers, ReLU, softmax cross-entropy, model
//!   composition, checkpoints.
//! - [`train`]: deterministic mini-batch training and evaluation.
//! - [`data`]: IDX parsing, ECG row validation, seeded synthetic data.
//! - [`accounting`]: parameter-byte accounting and latency order statistics.
//! - [`arch`]: the closed registry of experiment topologies.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File IO, timing and the CLI live in the companion `tvscm` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod accounting;
pub mod arch;
pub mod data;
mod error;
pub mod fft;
pub mod linalg;
pub mod nn;
pub mod structmat;
pub mod train;

pub use error::{Error, Result};
pub use linalg::Matrix;
