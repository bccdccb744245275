//! Numerical laboratory for Hardy-type inequalities without boundary terms on bounded
//! domains that are star-shaped with respect to the origin.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod fields;
pub mod funcspace;
pub mod geometry;
pub mod hardy;
pub mod probes;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod suite;
pub mod vecops;

pub use error::{Error, Result};
