//! Scenario runner for the `surfhj` verification suite.

pub mod ops;
pub mod report;
pub mod scenario;
