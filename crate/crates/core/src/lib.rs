//! Identifier-based mapping between a bibliographic source collection and
//! an OpenAlex-style target collection.

pub mod extsort;
pub mod index;
pub mod ingest;
pub mod mapper;
pub mod classifier;
pub mod cli;
pub mod pid;
pub mod provenance;
pub mod report;
pub mod resolver;
