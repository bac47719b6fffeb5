//! Iterative receivers: demapper and decoder exchange extrinsic bit
//! information through the interleaver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::air::{build_aux_trellis, AuxTrellis};
use crate::error::{Error, Result};
use crate::markov_middleton::MarkovMiddletonParams;
use crate::tx::{ConvCodeSpec, Interleaver, PskMapSpec};

use super::decoder::ConvDecoder;
use super::demap::{de_demap, genie_likelihoods, in_detect, psk_in_detect, SuperTrellis};
use super::soft::{
    bits_to_symbols, condition, deinterleave, extrinsic_divide, interleave, symbols_to_bits, Domain, Role, SoftMessage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// DPSK demapping and noise-state tracking in one super-trellis.
    Joint,
    /// Noise detection once, then a differential demapper in the loop.
    Separate,
    /// Coherent PSK over the same channel with a prior-aware IN detector.
    PskBaseline,
    /// Differential demapper with the true noise states known.
    GenieCsi,
}

impl Design {
    pub const ALL: [Design; 4] = [Design::Joint, Design::Separate, Design::PskBaseline, Design::GenieCsi];

    pub fn name(self) -> &'static str {
        match self {
            Design::Joint => "joint",
            Design::Separate => "separate",
            Design::PskBaseline => "psk_baseline",
            Design::GenieCsi => "genie_csi",
        }
    }

    /// Whether the transmitter applies differential encoding.
    pub fn differential(self) -> bool {
        self != Design::PskBaseline
    }
}

impl std::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Design::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown design {s:?}")))
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Normalised information-bit posteriors after each decoder pass; entry 0
/// is the non-iterative pass.
#[derive(Debug, Clone)]
pub struct TurboOutput {
    pub info_posteriors: Vec<SoftMessage>,
}

impl TurboOutput {
    pub fn iterations(&self) -> usize {
        self.info_posteriors.len().saturating_sub(1)
    }

    /// Hard decisions after pass `iteration`, ties toward 0.
    pub fn decisions(&self, iteration: usize) -> Vec<u8> {
        self.info_posteriors[iteration]
            .hard_decisions()
            .into_iter()
            .map(|b| b as u8)
            .collect()
    }
}

enum Front {
    Joint(SuperTrellis),
    Separate(AuxTrellis),
    Psk(AuxTrellis),
    Genie,
}

/// A receiver for one design and frame geometry; reusable across frames.
pub struct TurboReceiver {
    design: Design,
    rx: MarkovMiddletonParams,
    map: PskMapSpec,
    decoder: ConvDecoder,
    interleaver: Interleaver,
    front: Front,
}

impl TurboReceiver {
    pub fn new(
        design: Design,
        rx: MarkovMiddletonParams,
        map: PskMapSpec,
        code: &ConvCodeSpec,
        interleaver: Interleaver,
    ) -> Result<Self> {
        let depth = interleaver.depth();
        let (n, m) = (code.outputs(), map.bits_per_symbol());
        if !depth.is_multiple_of(n) || depth / n <= code.memory {
            return Err(Error::InvalidConfig(format!(
                "interleaver depth {depth} does not hold a terminated rate-1/{n} codeword"
            )));
        }
        if !depth.is_multiple_of(m) {
            return Err(Error::InvalidConfig(format!(
                "interleaver depth {depth} is not a multiple of {m} bits per symbol"
            )));
        }
        let front = match design {
            Design::Joint => Front::Joint(SuperTrellis::new(&rx, map.order())?),
            Design::Separate => Front::Separate(build_aux_trellis(&rx, map.order())?),
            Design::PskBaseline => Front::Psk(build_aux_trellis(&rx, map.order())?),
            Design::GenieCsi => {
                rx.validate()?;
                Front::Genie
            }
        };
        Ok(Self {
            design,
            rx,
            map,
            decoder: ConvDecoder::new(code)?,
            interleaver,
            front,
        })
    }

    pub fn design(&self) -> Design {
        self.design
    }

    /// Information bits per frame, tail excluded.
    pub fn info_len(&self) -> usize {
        self.interleaver.depth() / self.decoder.code().outputs() - self.decoder.code().memory
    }

    /// Channel uses per frame.
    pub fn symbols_per_frame(&self) -> usize {
        self.interleaver.depth() / self.map.bits_per_symbol()
    }

    /// Runs the initial pass plus `iterations` feedback passes. `states`
    /// (the true noise states) is required by the genie design only.
    pub fn decode(&self, y: &[Complex64], iterations: usize, states: Option<&[usize]>) -> Result<TurboOutput> {
        let t_len = self.symbols_per_frame();
        if y.len() != t_len {
            return Err(Error::Dimension(format!(
                "{} observations, frame holds {t_len}",
                y.len()
            )));
        }
        let order = self.map.order();
        let z_soft = match &self.front {
            Front::Separate(aux) => Some(in_detect(y, aux)?),
            Front::Genie => {
                let states =
                    states.ok_or_else(|| Error::InvalidConfig("genie receiver needs the noise states".into()))?;
                Some(genie_likelihoods(y, states, &self.rx, order)?)
            }
            _ => None,
        };

        let k = self.info_len();
        let mut prior_x = SoftMessage::uniform(Domain::Symbol, t_len, order);
        let mut out = Vec::with_capacity(iterations + 1);
        for pass in 0..=iterations {
            let sym_joint = match &self.front {
                Front::Joint(st) => st.demap(y, &prior_x)?,
                Front::Psk(aux) => psk_in_detect(y, aux, &prior_x)?,
                Front::Separate(_) | Front::Genie => de_demap(z_soft.as_ref().expect("set above"), &prior_x)?,
            };
            let bit_joint = symbols_to_bits(&sym_joint, &self.map)?;
            let bit_prior = symbols_to_bits(&prior_x, &self.map)?;
            let ext_d = condition(&extrinsic_divide(&bit_joint, &bit_prior, Role::ExtrinsicLikelihood)?);
            let ext_c = deinterleave(&ext_d, &self.interleaver)?;
            let dec = self.decoder.decode(&ext_c)?;

            let mut info = dec.info.normalized();
            info.values.truncate_rows(k);
            out.push(info);

            if pass < iterations {
                let ext_prior = condition(&extrinsic_divide(&dec.coded, &ext_c, Role::ExtrinsicPrior)?);
                let prior_d = interleave(&ext_prior, &self.interleaver)?;
                prior_x = bits_to_symbols(&prior_d, &self.map)?.normalized();
            }
        }
        Ok(TurboOutput { info_posteriors: out })
    }
}

/// One-shot turbo decoding of a frame.
#[allow(clippy::too_many_arguments)]
pub fn turbo_decode(
    y: &[Complex64],
    design: Design,
    rx: MarkovMiddletonParams,
    map: &PskMapSpec,
    code: &ConvCodeSpec,
    interleaver: &Interleaver,
    iterations: usize,
    states: Option<&[usize]>,
) -> Result<TurboOutput> {
    TurboReceiver::new(design, rx, map.clone(), code, interleaver.clone())?.decode(y, iterations, states)
}
