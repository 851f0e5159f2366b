//! Corpus files, remote annotation, experiment grids and result tables on top
//! of `crisis-ssl-core`.

pub mod aggregate;
pub mod cache;
pub mod config;
pub mod error;
pub mod export;
pub mod io;
pub mod mock;
pub mod remote;
pub mod runner;

#[cfg(test)]
mod testutil;

pub use crisis_ssl_core as core;
pub use error::{Error, Result};
