//! Command-line front end for stabmatch: the single-solve pipeline and the
//! manifest-driven benchmark harness.

pub mod bench;
pub mod flags;
pub mod pipeline;

pub use flags::{OutputFormat, SharedFlags, SolveOptions};
pub use pipeline::{LoadedInstance, PipelineError, Report, Stage};
