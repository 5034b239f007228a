//! Finitary combinatorial principles over partial finite structures.

pub mod adversary;
pub mod catalog;
pub mod cli;
pub mod density;
pub mod determinacy;
pub mod dtrees;
pub mod encoding;
pub mod error;
pub mod partial;
pub mod reduce;
pub mod syntax;
pub mod translate;
pub mod util;

pub use error::{Error, Result};
