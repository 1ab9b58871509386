//! File formats, benchmarking and the `tvscm` command-line tool built on
//! [`tvscm_core`].

pub mod bench;
pub mod cli;
mod error;
pub mod io;
pub mod manifest;
pub mod report;

pub use error::{Error, Result};
pub use tvscm_core as core;
