//! File formats, tracing and the corpus runner for the mupuppet compiler.
//!
//! The evaluator itself lives in `mupuppet-core`; this crate adds what needs
//! `std`: JSON catalogs and facts, NDJSON traces, diagnostics with file
//! names, and running a directory of conformance cases.

pub mod corpus;
pub mod driver;
pub mod json;
pub mod trace;

pub use driver::{Failure, Job};
pub use json::{CatalogDocument, FormatError};
