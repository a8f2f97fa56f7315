//! Dataset ingestion, scaffold splits, probe suites and report files.

mod config;
mod dataset;
mod report;
mod split;
mod suite;
mod synthetic;

pub use config::*;
pub use dataset::*;
pub use report::*;
pub use split::*;
pub use suite::*;
pub use synthetic::*;
