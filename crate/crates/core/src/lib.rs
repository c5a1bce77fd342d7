//! Higher-order moment identifiability for linear factor models.

pub mod cli;
pub mod codim;
pub mod cumulants;
pub mod error;
pub mod famodel;
pub mod jacobian;
pub mod linalg;
mod par;
pub mod poly;
pub mod scalar;
pub mod simulate;
pub mod symtensor;

pub use error::{Error, Result};
