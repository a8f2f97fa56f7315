//! Probe-task evaluation of molecular graph embeddings.

pub mod embedspace;
pub mod encoder;
pub mod graphstats;
pub mod metrics;
pub mod molgraph;
pub mod pipeline;
pub mod probe;
pub mod substructure;
