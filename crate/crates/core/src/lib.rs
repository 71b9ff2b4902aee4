pub mod error;
pub mod evaluation;
pub mod lazy;
pub mod preprocessing;
pub mod series;
pub mod stats;
pub mod strategies;

pub use error::{Error, Result};
