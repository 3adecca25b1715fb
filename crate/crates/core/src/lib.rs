//! Jet-space Carnot groups `J^k(R^n)` and numerical certificates for
//! Lipschitz non-extension and filling-volume lower bounds.

// `!(x > 0.0)` is used deliberately so that NaN is rejected with the other bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod fillvol;
pub mod heisenberg;
pub mod jet;
pub mod jetmaps;
pub mod multiindex;
pub mod nonextension;
mod numfmt;
pub mod paths;
pub mod poly;

pub use error::{JetError, Result};
