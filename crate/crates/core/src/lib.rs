pub mod error;
pub mod events;
pub mod expr;
pub mod graph;
pub mod identify;
pub mod oracle;
pub mod worlds;

pub use error::{Error, Result};
