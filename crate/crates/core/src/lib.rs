pub mod coeffexpr;
pub mod diffop;
pub mod error;
pub mod models;
pub mod rootsys;
pub mod verify;

pub use error::{Error, Result};
