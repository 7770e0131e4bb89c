//! Mining complex-simple sentence pairs from document-summary corpora.

pub mod aligner;
pub mod attributes;
pub mod corpus;
pub mod embedding;
pub mod filterer;
pub mod pipeline;
pub mod stats;
