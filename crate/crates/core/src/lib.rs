//! Broadcasting a root bit on very simple increasing and shape exchangeable
//! random recursive trees.
//!
//! The crate grows trees with exact attachment laws ([`tree`]), colors them
//! ([`broadcast`]), tracks the color difference as an integer Markov walk
//! ([`walk`]) or as a four-type Pólya urn ([`urn`]), computes exact laws at
//! small horizons ([`oracle`]), and runs reproducible Monte Carlo experiments
//! on the majority estimator ([`experiments`]).

pub mod broadcast;
mod ddouble;
pub mod error;
pub mod experiments;
pub mod oracle;
pub mod params;
pub mod tree;
pub mod urn;
pub mod walk;

pub use error::{Error, Result};
pub use params::{AlphaSpec, Family, ModelParams};
