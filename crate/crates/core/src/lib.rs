//! Rounding approximately synchronous quantum strategies for synchronous games.
// tolerance checks are written `!(x <= tol)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod game;
pub mod generate;
pub mod io;
pub mod operator;
pub mod rounding;
pub mod soundness;
pub mod strategy;
pub mod sweep;

pub use error::{Error, Result};
