//! Partial complex-scaling spectra (one resonance plus a band of rotated
//! quasi-continuum) extracted from a real stabilization graph, with a direct
//! complex-scaling benchmark on the same basis.

pub mod cli;
pub mod config;
pub mod contfit;
pub mod diabatize;
pub mod direct;
pub mod eig;
pub mod error;
pub mod expost;
pub mod lsq;
pub mod model1d;
pub mod pipeline;
pub mod quad;
pub mod spline;
pub mod stabgraph;

pub use error::{Error, Result};
