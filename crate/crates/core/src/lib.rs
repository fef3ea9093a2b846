pub mod channel;
pub mod distortion;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod wavelet;

pub use error::{Error, Result};
