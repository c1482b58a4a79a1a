//! Scale functions of spectrally negative Levy processes via
//! continuous-time Markov chain approximation.
//!
//! The library builds an upwardly skip-free chain on a spatial grid of step
//! h from a process triplet (sigma^2, measure, mu), runs a linear-time
//! recursion for the q-scale functions W and Z of the chain, and provides
//! closed-form references, convergence sweeps and first-passage style
//! applications on top of the tables.

// Validation guards are written as negated comparisons, e.g. !(x > 0.0),
// so that NaN inputs fail closed instead of slipping past a `<=` test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod chain;
pub mod cli;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod measure;
pub mod num;
pub mod process;
pub mod quad;
pub mod reference;
pub mod scale;

pub use error::{Error, Result};
