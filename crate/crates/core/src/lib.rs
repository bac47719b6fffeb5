//! Markov-Middleton impulsive-noise channel simulation, achievable
//! information rate estimation, and MAP turbo receivers for
//! convolutionally coded differential PSK.

pub mod air;
pub mod error;
pub mod harness;
pub mod markov_middleton;
pub mod receivers;
pub mod rng;
pub mod trellis;
pub mod tx;

pub use error::{Error, Result};
pub use markov_middleton::{MarkovMiddletonParams, NoiseModel, NoiseRealization};
