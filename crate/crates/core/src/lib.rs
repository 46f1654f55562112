//! Derivation of universal product rules for second-order moments, with a
//! random-matrix check of the results. See the guide under `book/`.

pub mod error;
pub mod ansatz;
pub mod cli;
pub mod constraints;
pub mod derivations;
pub mod expr;
pub mod free;
pub mod matrix_lab;
pub mod report;
pub mod rules;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/ansatz.md")]
    mod ansatz {}
    #[doc = include_str!("../../../book/src/constraints.md")]
    mod constraints {}
    #[doc = include_str!("../../../book/src/derivations.md")]
    mod derivations {}
    #[doc = include_str!("../../../book/src/explore.md")]
    mod explore {}
    #[doc = include_str!("../../../book/src/matrix-lab.md")]
    mod matrix_lab {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
