//! Toolkit for detecting, measuring and mitigating translation artifacts
//! in cross-lingual NLI and QA datasets.

pub mod align;
pub mod calibrate;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod filter;
pub mod report;
pub mod spans;
pub mod stats;
pub mod synthetic;
pub mod tokenize;
pub mod variant;

pub use error::{Error, Result};
