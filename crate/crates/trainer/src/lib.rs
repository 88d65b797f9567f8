//! File formats, configuration and the training loop around `stop-core`.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod events;
pub mod gradcheck;
pub mod idx;
pub mod metrics;
pub mod profile;
pub mod train;

pub use error::{Failure, Result};
