//! Std companion to `nc-hardy-core`: file formats, a thread-pool executor for
//! Monte Carlo chunks, reports, the acceptance suite and the `nc-hardy` CLI.

pub mod acceptance;
pub mod format;
pub mod parallel;
pub mod cli;
