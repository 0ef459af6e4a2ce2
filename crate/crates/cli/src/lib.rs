//! JSON persistence and command-line dispatch for the defect calculus
//! workbench.

pub mod dispatch;
pub mod document;
pub mod report;

pub use dispatch::{dispatch, EXIT_FALSE, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};
pub use document::{parse_pair, serialize_pair, IoError, PairDocument};
