pub mod error;
pub mod features;
pub mod ingest;
pub mod linkage;
pub mod trees;
