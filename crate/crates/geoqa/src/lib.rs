//! Geospatial question answering over a source-tagged RDF store.

pub mod annotate;
pub mod eval;
pub mod exec;
pub mod geometry;
pub mod interlink;
pub mod kb;
pub mod lexicon;
pub mod pipeline;
pub mod qgen;
pub mod vocab;
