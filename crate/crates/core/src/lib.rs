//! Semi-supervised text classification under tiny label budgets.
//!
//! The crate is `no_std` (with `alloc`) and holds the pure algorithmic parts:
//! labels-per-class splits, hashed n-gram features, a compact softmax
//! classifier, pseudo-label sources that need no IO, the training strategies
//! and the evaluation metrics. File formats, the remote annotation client and
//! the experiment runner live in the `crisis-ssl` crate.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod error;
pub mod features;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod seed;
pub mod strategies;
pub mod synthetic;

pub use error::{CoreError, Result};
