// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod extension;
pub mod analysis;
pub mod contraction;
pub mod flux;
pub mod green;
pub mod jet;
pub mod landau;
pub mod pipeline;
pub mod solver;

pub use error::{Error, Result};
