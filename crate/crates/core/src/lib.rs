//! Near-field joint radar-communication simulator.
//!
//! A multi-antenna base station serves a single-antenna user through a
//! direct link and an amplify-and-forward relay while sensing a near-field
//! target amid clutter with the same transmit waveform.

pub mod array;
pub mod comm;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod power;
pub mod propagation;
pub mod radar;
pub mod scenario;
pub mod stats;

pub use error::{Error, Result};
