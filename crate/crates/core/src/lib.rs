pub mod codegen;
pub mod compression;
pub mod error;
pub mod harness;
pub mod machines;
pub mod petri;

pub use error::{Error, Result};
