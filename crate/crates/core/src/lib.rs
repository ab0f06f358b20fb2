//! Skeleton-based action recognition from locally aggregated kinematic
//! offsets, compressed into supervised binary codes.

pub mod classifier;
pub mod codebook;
pub mod error;
pub mod harness;
pub(crate) mod kv;
pub mod model_io;
pub mod sha;
pub mod skeleton;
pub mod skeletonlet;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
