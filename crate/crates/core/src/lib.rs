//! Forward simulation of boundary electric-field data in 2D transverse-electric
//! dielectric media and time-reversal reconstruction of the radiating current
//! source, with Debye-loss attenuation operators and their compensation.

pub mod attenuation;
pub mod error;
pub mod forward;
pub mod greens;
pub mod medium;
pub mod reconstruct;
pub mod source;
pub mod special;
pub mod util;

pub use error::{Error, Result};
