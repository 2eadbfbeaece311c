//! Simulator for distributed (Δ+1)-coloring by palette sparsification.
//!
//! Nodes sample short random color lists, talk only over the sparsified
//! graph (edges whose lists intersect) plus a few sampled aux edges, and
//! complete a list coloring through an almost-clique decomposition,
//! preconditioning, colorful matchings and augmenting trees. Every message
//! is charged against a per-edge bandwidth so round counts are meaningful.

pub mod acd;
pub mod augpath;
pub mod coloring;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod matching;
pub mod oracle;
pub mod palette;
pub mod params;
pub mod pipeline;
pub mod precondition;
pub mod push;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use palette::Color;
pub use params::{Mode, Params};
