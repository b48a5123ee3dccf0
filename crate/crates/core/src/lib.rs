pub mod error;
pub mod format;
pub mod pulses;
pub mod rotations;
pub mod scaling;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
