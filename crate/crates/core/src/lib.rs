//! Hardy spaces of free noncommutative functions on the noncommutative
//! polydisc and ball, with two independent integration routes over the
//! distinguished boundaries: exact Weingarten calculus and seeded Haar
//! Monte Carlo.
//!
//! The crate is `no_std` (with `alloc`). Parallel execution, file formats and
//! the command line live in the `nc-hardy` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod haar;
pub mod hardy;
pub mod linalg;
pub mod perm;
pub mod weingarten;
pub mod words;

pub use error::{Error, Result};
pub use linalg::{CMatrix, Complex64};
pub use weingarten::{BoundaryKind, WeingartenTable};
pub use words::{MatrixTuple, NcSeries, Word};
