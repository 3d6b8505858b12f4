//! Edge-level explanations for graph neural networks.
//!
//! The crate trains small GCN and GGNN models on generated or loaded graphs,
//! explains individual predictions by scoring every input edge, and
//! evaluates those scores with recall and removal-curve protocols.

pub mod datasets;
pub mod error;
pub mod eval;
pub mod exec;
pub mod explain;
pub mod graph;
pub mod models;
pub mod tensor;

pub use error::{Error, Result};
