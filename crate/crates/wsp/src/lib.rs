//! Standard-library companion to `wsp-core`: the FLD1 field format, the
//! spectral and quadrature oracles, manufactured fixtures, a scoped worker
//! pool, run configuration, verification suites and JSON reports.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod io;
pub mod oracle;
pub mod report;
pub mod verify;

pub use error::{Result, WspError};
