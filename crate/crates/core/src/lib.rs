//! Finite boolean algebras, regular-open completions, boolean-valued models
//! and the sheaves that connect them.
//!
//! Everything here is finite and exhaustive: algebras are powersets of at
//! most 64 labelled atoms, spaces have at most 64 points, and every
//! quantifier over filters, opens or antichains is a loop.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, sampling and
//! the command line live in the companion `stonean` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod balg;
pub mod bits;
pub mod bridge;
pub mod bvm;
mod error;
pub mod logic;
pub mod sheaf;
pub mod topo;

pub use error::{Error, Result};
