#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;

pub use error::{Error, Result};
pub mod colligation;
pub mod factor;
pub mod charfn;
pub mod dynamics;
pub mod quad;
pub mod coupling;
pub mod models;
pub mod io;
pub mod random;
pub mod verify;
