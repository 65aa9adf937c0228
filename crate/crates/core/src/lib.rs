pub mod birkhoff;
pub mod dynamics;
pub mod error;
pub mod hamcore;
pub mod kamlab;
pub mod nlsham;
pub mod seed;

pub use error::{Error, Result};
