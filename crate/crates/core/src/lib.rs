//! Pauli-spectrum analysis for constant-depth quantum circuits built from
//! single-qubit gates and unbounded-arity CZ gates.
//!
//! The crate is `no_std` and only needs an allocator. IO, file formats and the
//! command-line front end live in the `pauli-lens` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod boolfn;
pub mod boost;
pub mod circuit;
pub mod linalg;
pub mod lowdeg;
pub mod lp;
pub mod pauli;
pub mod states;

mod error;
mod limits;

pub use error::{Error, Result};
pub use limits::{dense_limit, set_dense_limit, DEFAULT_DENSE_LIMIT};
pub use linalg::{Matrix, C64};
pub use pauli::{ErrorLedger, PauliOperator, PauliString};
