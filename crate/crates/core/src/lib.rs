//! Contextual autocompletion of clinical concepts.

pub mod corpus;
pub mod corpusgen;
pub mod engine;
pub mod evaluation;
pub mod extraction;
pub mod features;
pub mod ontology;
pub mod ranking;
pub mod session;
pub mod text;
