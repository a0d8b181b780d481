//! Command-line front end: canned figures, parameter sweeps and closed-form
//! evaluations on top of `iongrad`.

pub mod config;
pub mod error;
pub mod figures;
pub mod formulas;
pub mod output;
pub mod plot;
pub mod pool;
pub mod sweep;

pub use error::{CliError, CliResult};
