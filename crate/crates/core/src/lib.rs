pub mod analysis;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod precoding;

pub use error::{Error, Result};
