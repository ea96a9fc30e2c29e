//! Linkage of institutions across university-ranking datasets and the
//! comparative analyses run over the linked corpus: overlap, geographic
//! preference, score construction, skewness, rank correlation and
//! pairwise-indicator discrepancies.

pub mod analyses;
pub mod country;
pub mod entity_link;
mod error;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod transforms;

pub use error::Error;
