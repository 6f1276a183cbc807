pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod io;
pub mod numerics;
pub mod sim;

pub use error::{Error, Result};
