//! Turbo receivers for coded DPSK over Markov-Middleton noise.

pub mod decoder;
pub mod demap;
pub mod soft;
pub mod turbo;

pub use decoder::{conv_map_decode, ConvDecoder, DecoderOutput};
pub use demap::{de_demap, genie_likelihoods, in_detect, joint_dpsk_in_demap, psk_in_detect, SuperTrellis};
pub use soft::{bits_to_symbols, condition, extrinsic_divide, symbols_to_bits, Domain, Role, SoftMessage};
pub use turbo::{turbo_decode, Design, TurboOutput, TurboReceiver};
