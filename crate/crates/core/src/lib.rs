#![allow(clippy::needless_range_loop)]

pub mod advect;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod matrixcore;
pub mod schemes;
pub mod sylvester;

pub use error::{Error, ErrorKind, Result};
