//! Applications of the chain: a two-axis coverage robot and a sequential
//! random search.

mod coverage;
mod search;

pub use coverage::{coverage_step, run_coverage, CoverageResult, CoverageSpec};
pub use search::{search_run, search_run_with, Objective, Schedule, SearchResult, SearchSpec, TraceRow};
