//! Command-line runner, report renderer and reference protocol adapter.

pub mod adapter;
pub mod report;
pub mod run;
pub mod store;
pub mod svg;
