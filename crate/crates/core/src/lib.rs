//! Authorship attribution of LLM-generated JavaScript: corpora, TF-IDF
//! features, five classifiers, code similarity and evaluation.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod similarity;

pub use error::{Error, Result};
