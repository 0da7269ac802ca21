//! Assigning fine-grained quantum states from coarse-grained data.
//!
//! Two inference rules are provided: the average assignment over a prior on
//! fine-grained states, and the maximum-entropy state reproducing the
//! effective data. Channels covered are the partial trace, a two-qubit
//! detector with limited resolution and the collective angular-momentum map.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aam;
pub mod channels;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mep;
pub mod montecarlo;
pub mod stats;
pub mod thermo;
pub mod validation;

pub use error::{Error, Result};
