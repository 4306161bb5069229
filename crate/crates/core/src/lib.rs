//! Secure multi-party marginal computation and differentially private
//! synthetic data generation.
//!
//! Layers, bottom up: [`ring`] fixed-point arithmetic, the [`rss`] three-party
//! engine, the [`backend`] abstraction shared with a plaintext oracle,
//! nonlinear [`primitives`], workload [`marginals`], the [`dp`] randomizers,
//! and the select-measure-generate [`pipeline`].

pub mod backend;
pub mod bench;
pub mod cli;
pub mod dp;
pub mod error;
pub mod io;
pub mod marginals;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod primitives;
pub mod ring;
pub mod rss;
pub mod schema;
pub(crate) mod seeds;
pub mod workload;

pub use error::{Error, Result};
