//! File formats, an external solver runner and the command line for the `phfl` workbench.

pub mod cli;
pub mod files;
pub mod solver;
pub mod verdict;

pub use cli::{run, Output};
