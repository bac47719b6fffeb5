//! Transmitter: convolutional encoder, bit interleaver, PSK mapper,
//! differential encoder and the additive channel.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_middleton::NoiseRealization;
use crate::rng;

/// Feedforward rate-1/n convolutional code with an `L`-stage register.
///
/// Generator bit `L` (the MSB) taps the current input, bit 0 taps the oldest
/// register stage, so `(5, 7)₈` is `g₀ = 101`, `g₁ = 111`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvCodeSpec {
    pub memory: usize,
    pub generators: Vec<u32>,
}

impl Default for ConvCodeSpec {
    fn default() -> Self {
        Self {
            memory: 2,
            generators: vec![0o5, 0o7],
        }
    }
}

impl ConvCodeSpec {
    pub fn new(memory: usize, generators: Vec<u32>) -> Result<Self> {
        let spec = Self { memory, generators };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses generators written in octal, e.g. `["5", "7"]`.
    pub fn from_octal(memory: usize, generators: &[&str]) -> Result<Self> {
        let gens = generators
            .iter()
            .map(|g| {
                u32::from_str_radix(g.trim(), 8)
                    .map_err(|_| Error::InvalidConfig(format!("generator {g:?} is not octal")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(memory, gens)
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.memory > 16 {
            return Err(Error::InvalidConfig(format!(
                "code memory {} out of range",
                self.memory
            )));
        }
        if self.generators.is_empty() {
            return Err(Error::InvalidConfig("code needs at least one generator".into()));
        }
        let limit = 1u32 << (self.memory + 1);
        if self.generators.iter().any(|&g| g == 0 || g >= limit) {
            return Err(Error::InvalidConfig(format!(
                "generators must lie in [1, {limit:o}₈) for memory {}",
                self.memory
            )));
        }
        Ok(())
    }

    /// Coded bits per information bit, `1/R`.
    pub fn outputs(&self) -> usize {
        self.generators.len()
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// Coded length for `info_len` information bits including the tail.
    pub fn coded_len(&self, info_len: usize) -> usize {
        (info_len + self.memory) * self.outputs()
    }

    /// One encoder step: returns the next state and the output bits packed
    /// with output 0 in bit 0.
    #[inline]
    pub fn step(&self, state: usize, bit: u8) -> (usize, u32) {
        let reg = ((bit as u32) << self.memory) | state as u32;
        let out = self
            .generators
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &g)| acc | (((reg & g).count_ones() & 1) << i));
        ((reg >> 1) as usize, out)
    }

    /// Encodes `bits` from the all-zero state and appends `L` zero tail bits.
    pub fn encode(&self, bits: &[u8]) -> Vec<u8> {
        let mut state = 0;
        let mut out = Vec::with_capacity(self.coded_len(bits.len()));
        for &b in bits.iter().chain(std::iter::repeat_n(&0u8, self.memory)) {
            let (next, word) = self.step(state, b & 1);
            for i in 0..self.outputs() {
                out.push(((word >> i) & 1) as u8);
            }
            state = next;
        }
        out
    }
}

/// Bit permutation: `interleave(c)[k] = c[perm[k]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

/// Uniformly random permutation of `[0, depth)`, fixed by `seed`.
pub fn make_interleaver(depth: usize, seed: u64) -> Result<Interleaver> {
    if depth == 0 {
        return Err(Error::InvalidConfig("interleaver depth must be positive".into()));
    }
    let mut perm: Vec<usize> = (0..depth).collect();
    perm.shuffle(&mut rng::rng_from_seed(seed));
    Interleaver::from_permutation(perm)
}

impl Interleaver {
    pub fn from_permutation(perm: Vec<usize>) -> Result<Self> {
        let mut inverse = vec![usize::MAX; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            if p >= perm.len() || inverse[p] != usize::MAX {
                return Err(Error::InvalidConfig("not a permutation".into()));
            }
            inverse[p] = k;
        }
        Ok(Self { perm, inverse })
    }

    pub fn depth(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Clone>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.depth(), "interleaver depth mismatch");
        self.perm.iter().map(|&p| input[p].clone()).collect()
    }

    pub fn deinterleave<T: Clone>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.depth(), "interleaver depth mismatch");
        self.inverse.iter().map(|&k| input[k].clone()).collect()
    }
}

/// M-PSK constellation `e^{j2πi/M}` with a bit labelling.
#[derive(Debug, Clone)]
pub struct PskMapSpec {
    order: usize,
    bits_per_symbol: usize,
    label_of_phase: Vec<usize>,
    phase_of_label: Vec<usize>,
    points: Vec<Complex64>,
}

impl PskMapSpec {
    /// Gray labelling: phase index `i` carries label `i ^ (i >> 1)`, with the
    /// first bit of each group as the label MSB.
    pub fn gray(order: usize) -> Result<Self> {
        Self::with_labels(order, (0..order).map(|i| i ^ (i >> 1)).collect())
    }

    pub fn with_labels(order: usize, label_of_phase: Vec<usize>) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "PSK order {order} must be a power of two ≥ 2"
            )));
        }
        if label_of_phase.len() != order {
            return Err(Error::InvalidConfig("labelling size differs from order".into()));
        }
        let mut phase_of_label = vec![usize::MAX; order];
        for (phase, &label) in label_of_phase.iter().enumerate() {
            if label >= order || phase_of_label[label] != usize::MAX {
                return Err(Error::InvalidConfig("labelling is not a bijection".into()));
            }
            phase_of_label[label] = phase;
        }
        let points = (0..order).map(|i| psk_point(order, i)).collect();
        Ok(Self {
            order,
            bits_per_symbol: order.trailing_zeros() as usize,
            label_of_phase,
            phase_of_label,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label_of_phase(&self, phase: usize) -> usize {
        self.label_of_phase[phase]
    }

    pub fn phase_of_label(&self, label: usize) -> usize {
        self.phase_of_label[label]
    }

    /// Value of bit `pos` (0 = first / MSB) in the label of `phase`.
    #[inline]
    pub fn bit(&self, phase: usize, pos: usize) -> u8 {
        ((self.label_of_phase[phase] >> (self.bits_per_symbol - 1 - pos)) & 1) as u8
    }

    /// Maps consecutive groups of `log₂M` bits to phase indices.
    pub fn map(&self, bits: &[u8]) -> Result<SymbolFrame> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::Dimension(format!(
                "{} bits do not split into {}-bit symbols",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        let phases = bits
            .chunks(self.bits_per_symbol)
            .map(|group| {
                let label = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.phase_of_label[label]
            })
            .collect();
        Ok(SymbolFrame {
            order: self.order,
            phases,
        })
    }

    /// Inverse of [`PskMapSpec::map`].
    pub fn demap(&self, frame: &SymbolFrame) -> Vec<u8> {
        frame
            .phases
            .iter()
            .flat_map(|&p| (0..self.bits_per_symbol).map(move |k| self.bit(p, k)))
            .collect()
    }
}

pub fn psk_point(order: usize, phase: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase as f64 / order as f64)
}

/// PSK symbols stored as integer phase indices modulo `order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolFrame {
    pub order: usize,
    pub phases: Vec<usize>,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn symbols(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| psk_point(self.order, p)).collect()
    }
}

/// `z_t = x_t · z_{t-1}` with `z_0 = 1`; the reference `z_0` is not
/// included in the output.
pub fn differential_encode(x: &SymbolFrame) -> SymbolFrame {
    let mut acc = 0;
    let phases = x
        .phases
        .iter()
        .map(|&p| {
            acc = (acc + p) % x.order;
            acc
        })
        .collect();
    SymbolFrame { order: x.order, phases }
}

/// `y_t = s_t + n_t`.
pub fn apply_channel(symbols: &SymbolFrame, noise: &NoiseRealization) -> Result<Vec<Complex64>> {
    if symbols.len() != noise.len() {
        return Err(Error::Dimension(format!(
            "{} symbols but {} noise samples",
            symbols.len(),
            noise.len()
        )));
    }
    Ok(symbols
        .symbols()
        .into_iter()
        .zip(&noise.samples)
        .map(|(s, n)| s + n)
        .collect())
}
