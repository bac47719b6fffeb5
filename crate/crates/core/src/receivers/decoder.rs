//! Symbol-by-symbol MAP decoder for terminated feed-forward convolutional
//! codes.

use crate::error::{Error, Result};
use crate::trellis::{forward_backward, BranchMetrics, EdgeLabels, LogMatrix, Transition, TrellisSpec};
use crate::tx::ConvCodeSpec;

use super::soft::{Domain, Role, SoftMessage};

/// Decoder outputs, both as joints `log p(·, observations)`.
#[derive(Debug, Clone)]
pub struct DecoderOutput {
    /// One row per encoder input, tail included.
    pub info: SoftMessage,
    /// One row per coded bit, in transmission order.
    pub coded: SoftMessage,
    pub log_evidence: f64,
}

/// Code trellis with one labelling per output stream, built once per code.
#[derive(Debug, Clone)]
pub struct ConvDecoder {
    code: ConvCodeSpec,
    trellis: TrellisSpec,
    words: Vec<u32>,
    by_input: EdgeLabels,
    by_output: Vec<EdgeLabels>,
}

impl ConvDecoder {
    pub fn new(code: &ConvCodeSpec) -> Result<Self> {
        code.validate()?;
        let states = code.num_states();
        let mut transitions = Vec::with_capacity(2 * states);
        let mut words = Vec::with_capacity(2 * states);
        for from in 0..states {
            for bit in 0..2u8 {
                let (to, word) = code.step(from, bit);
                transitions.push(Transition {
                    from,
                    to,
                    label: bit as usize,
                });
                words.push(word);
            }
        }
        let trellis = TrellisSpec::new(states, 2, transitions)?;
        let by_input = EdgeLabels::by_input(&trellis);
        let by_output = (0..code.outputs())
            .map(|i| {
                let labels = words.iter().map(|w| Some(((w >> i) & 1) as usize)).collect();
                EdgeLabels::new(labels, 2)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            code: code.clone(),
            trellis,
            words,
            by_input,
            by_output,
        })
    }

    pub fn code(&self) -> &ConvCodeSpec {
        &self.code
    }

    pub fn trellis(&self) -> &TrellisSpec {
        &self.trellis
    }

    /// MAP decoding from per-coded-bit log-likelihoods (any per-row offset is
    /// harmless). Start and end states are pinned to zero, input bits are
    /// equiprobable.
    pub fn decode(&self, coded_lik: &SoftMessage) -> Result<DecoderOutput> {
        let n = self.code.outputs();
        if coded_lik.alphabet() != 2 || coded_lik.is_empty() || !coded_lik.len().is_multiple_of(n) {
            return Err(Error::Dimension(format!(
                "{} coded-bit messages for a rate-1/{n} code",
                coded_lik.len()
            )));
        }
        let steps = coded_lik.len() / n;
        if steps < self.code.memory {
            return Err(Error::Dimension("frame shorter than the code tail".into()));
        }
        let metrics = CodeMetrics {
            lik: &coded_lik.values,
            words: &self.words,
            outputs: n,
            steps,
        };
        let mut pinned = vec![f64::NEG_INFINITY; self.trellis.num_states()];
        pinned[0] = 0.0;
        let mut labelings: Vec<&EdgeLabels> = vec![&self.by_input];
        labelings.extend(self.by_output.iter());
        let (outs, log_evidence) = forward_backward(&self.trellis, &metrics, &pinned, &pinned, &labelings)?;
        let info = SoftMessage::new(Role::Joint, Domain::InfoBit, outs[0].clone());
        let mut coded = LogMatrix::filled(steps * n, 2, f64::NEG_INFINITY);
        for (i, m) in outs[1..].iter().enumerate() {
            for k in 0..steps {
                coded.row_mut(k * n + i).copy_from_slice(m.row(k));
            }
        }
        Ok(DecoderOutput {
            info,
            coded: SoftMessage::new(Role::Joint, Domain::CodedBit, coded),
            log_evidence,
        })
    }
}

struct CodeMetrics<'a> {
    lik: &'a LogMatrix,
    words: &'a [u32],
    outputs: usize,
    steps: usize,
}

impl BranchMetrics for CodeMetrics<'_> {
    fn num_steps(&self) -> usize {
        self.steps
    }

    fn fill_step(&self, k: usize, _trellis: &TrellisSpec, out: &mut [f64]) {
        let half = 0.5f64.ln();
        for (o, &word) in out.iter_mut().zip(self.words) {
            *o = half
                + (0..self.outputs)
                    .map(|i| self.lik.get(k * self.outputs + i, ((word >> i) & 1) as usize))
                    .sum::<f64>();
        }
    }
}

/// One-shot MAP decoding.
pub fn conv_map_decode(code: &ConvCodeSpec, coded_lik: &SoftMessage) -> Result<DecoderOutput> {
    ConvDecoder::new(code)?.decode(coded_lik)
}
