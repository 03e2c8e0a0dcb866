//! File formats, seeded sampling, reports and the command line for
//! [`stonean_core`].

pub mod cli;
mod error;
pub mod format;
pub mod report;
pub mod sample;
pub mod workspace;

pub use error::{InputError, Result};
