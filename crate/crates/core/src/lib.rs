//! Community detection in edge-labeled sparse networks.
//!
//! The crate covers the full inference pipeline for two-module networks
//! whose edges carry categorical labels:
//!
//! - [`graph`]: immutable labeled graphs with a directed-edge index.
//! - [`sbm`]: generative ensembles and seeded samplers.
//! - [`bp`]: belief-propagation module inference on a sampled network.
//! - [`em`]: expectation-maximization learning of the label strengths.
//! - [`spectral`]: the weighted non-backtracking operator whose spectrum
//!   predicts when belief propagation picks up the planted structure.
//! - [`phase`]: closed-form detectability thresholds and overlap scoring.

pub mod bp;
pub mod em;
pub mod error;
pub mod graph;
pub mod phase;
pub mod sbm;
pub mod spectral;

pub use error::{Error, Result};
