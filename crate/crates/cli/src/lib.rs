//! Batch pipeline behind the `edh` binary: spectra, witness scans, quench
//! time series and run reports written as CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
mod error;
pub mod output;
pub mod plot;
pub mod regression;
pub mod selftest;

pub use error::{CliError, CliResult};
