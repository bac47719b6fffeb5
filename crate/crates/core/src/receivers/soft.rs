//! Soft messages exchanged between turbo components, and the algebra on
//! them: extrinsic division, bit/symbol conversion and (de)interleaving.

use crate::error::{Error, Result};
use crate::trellis::{lse, LogMatrix};
use crate::tx::{Interleaver, PskMapSpec};

/// Floor applied to conditioned extrinsic messages.
pub const EXTRINSIC_FLOOR: f64 = -50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Joint,
    ExtrinsicLikelihood,
    ExtrinsicPrior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    InfoBit,
    CodedBit,
    InterleavedBit,
    Symbol,
    DiffSymbol,
}

/// Per-index log-probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMessage {
    pub role: Role,
    pub domain: Domain,
    pub values: LogMatrix,
}

impl SoftMessage {
    pub fn new(role: Role, domain: Domain, values: LogMatrix) -> Self {
        Self { role, domain, values }
    }

    /// Uniform prior over `alphabet` values at each of `len` indices.
    pub fn uniform(domain: Domain, len: usize, alphabet: usize) -> Self {
        Self::new(
            Role::ExtrinsicPrior,
            domain,
            LogMatrix::filled(len, alphabet, -(alphabet as f64).ln()),
        )
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn alphabet(&self) -> usize {
        self.values.cols()
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Copy with every index shifted to a proper distribution.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        out.values.normalize_rows();
        out
    }

    /// Argmax per index, ties toward the lowest value.
    pub fn hard_decisions(&self) -> Vec<usize> {
        self.values.argmax_rows()
    }

    /// `log Σ` over the alphabet at each index.
    pub fn normalizers(&self) -> Vec<f64> {
        self.values.iter_rows().map(lse).collect()
    }
}

fn same_shape(a: &SoftMessage, b: &SoftMessage) -> Result<()> {
    if a.len() != b.len() || a.alphabet() != b.alphabet() {
        return Err(Error::Dimension(format!(
            "messages are {}×{} and {}×{}",
            a.len(),
            a.alphabet(),
            b.len(),
            b.alphabet()
        )));
    }
    Ok(())
}

/// `joint / used_input` elementwise (log subtraction), without
/// normalisation. Entries where both are zero-probability stay `-inf`.
pub fn extrinsic_divide(joint: &SoftMessage, used_input: &SoftMessage, role: Role) -> Result<SoftMessage> {
    same_shape(joint, used_input)?;
    let mut values = LogMatrix::filled(joint.len(), joint.alphabet(), f64::NEG_INFINITY);
    for t in 0..joint.len() {
        let (j, u) = (joint.values.row(t), used_input.values.row(t));
        for (m, out) in values.row_mut(t).iter_mut().enumerate() {
            *out = match (j[m] == f64::NEG_INFINITY, u[m] == f64::NEG_INFINITY) {
                (true, _) => f64::NEG_INFINITY,
                (false, true) => return Err(Error::ExtrinsicDivision { index: t, entry: m }),
                (false, false) => j[m] - u[m],
            };
        }
    }
    Ok(SoftMessage::new(role, joint.domain, values))
}

/// Normalises, floors at [`EXTRINSIC_FLOOR`] and renormalises, so the
/// message can be reused as a prior or likelihood.
pub fn condition(msg: &SoftMessage) -> SoftMessage {
    let mut out = msg.normalized();
    let cols = out.alphabet();
    for t in 0..out.len() {
        let row = out.values.row_mut(t);
        if row.iter().all(|v| *v == f64::NEG_INFINITY) {
            // nothing known: fall back to uniform
            row.iter_mut().for_each(|v| *v = -(cols as f64).ln());
            continue;
        }
        row.iter_mut().for_each(|v| *v = v.max(EXTRINSIC_FLOOR));
        let z = lse(row);
        row.iter_mut().for_each(|v| *v -= z);
    }
    out
}

/// Φ: symbol log-probability as the sum of its label bits' log-probabilities.
pub fn bits_to_symbols(bits: &SoftMessage, map: &PskMapSpec) -> Result<SoftMessage> {
    let m = map.bits_per_symbol();
    if bits.alphabet() != 2 || !bits.len().is_multiple_of(m) {
        return Err(Error::Dimension(format!(
            "{} bit messages do not align with {m}-bit symbols",
            bits.len()
        )));
    }
    let len = bits.len() / m;
    let mut values = LogMatrix::filled(len, map.order(), 0.0);
    for t in 0..len {
        for (phase, out) in values.row_mut(t).iter_mut().enumerate() {
            *out = (0..m)
                .map(|k| bits.values.get(t * m + k, map.bit(phase, k) as usize))
                .sum();
        }
    }
    let domain = match bits.domain {
        Domain::InterleavedBit => Domain::Symbol,
        other => other,
    };
    Ok(SoftMessage::new(bits.role, domain, values))
}

/// Φ⁻¹: bit log-probability as the log-sum over symbols whose label has
/// that bit value.
pub fn symbols_to_bits(symbols: &SoftMessage, map: &PskMapSpec) -> Result<SoftMessage> {
    if symbols.alphabet() != map.order() {
        return Err(Error::Dimension(format!(
            "symbol message over {} values, constellation has {}",
            symbols.alphabet(),
            map.order()
        )));
    }
    let m = map.bits_per_symbol();
    let mut values = LogMatrix::filled(symbols.len() * m, 2, f64::NEG_INFINITY);
    let mut buckets = [Vec::with_capacity(map.order()), Vec::with_capacity(map.order())];
    for t in 0..symbols.len() {
        let row = symbols.values.row(t);
        for k in 0..m {
            buckets.iter_mut().for_each(Vec::clear);
            for (phase, &v) in row.iter().enumerate() {
                buckets[map.bit(phase, k) as usize].push(v);
            }
            values.set(t * m + k, 0, lse(&buckets[0]));
            values.set(t * m + k, 1, lse(&buckets[1]));
        }
    }
    let domain = match symbols.domain {
        Domain::Symbol | Domain::DiffSymbol => Domain::InterleavedBit,
        other => other,
    };
    Ok(SoftMessage::new(symbols.role, domain, values))
}

fn permute_rows(msg: &SoftMessage, order: &[usize], domain: Domain) -> Result<SoftMessage> {
    if order.len() != msg.len() {
        return Err(Error::Dimension(format!(
            "interleaver depth {} vs message length {}",
            order.len(),
            msg.len()
        )));
    }
    let rows: Vec<Vec<f64>> = order.iter().map(|&k| msg.values.row(k).to_vec()).collect();
    Ok(SoftMessage::new(msg.role, domain, LogMatrix::from_rows(&rows)?))
}

/// Coded-bit order to interleaved order.
pub fn interleave(msg: &SoftMessage, pi: &Interleaver) -> Result<SoftMessage> {
    permute_rows(msg, pi.permutation(), Domain::InterleavedBit)
}

/// Interleaved order back to coded-bit order.
pub fn deinterleave(msg: &SoftMessage, pi: &Interleaver) -> Result<SoftMessage> {
    let positions: Vec<usize> = {
        let mut inv = vec![0; pi.depth()];
        for (k, &p) in pi.permutation().iter().enumerate() {
            inv[p] = k;
        }
        inv
    };
    permute_rows(msg, &positions, Domain::CodedBit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn msg(rows: &[Vec<f64>], domain: Domain) -> SoftMessage {
        SoftMessage::new(Role::Joint, domain, LogMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn uniform_divisor_gives_scaled_joint() {
        let joint = msg(&[vec![-1.0, -2.0, -0.5, -3.0]], Domain::Symbol);
        let u = SoftMessage::uniform(Domain::Symbol, 1, 4);
        let ext = extrinsic_divide(&joint, &u, Role::ExtrinsicLikelihood).unwrap();
        let a = joint.normalized();
        let b = ext.normalized();
        for m in 0..4 {
            assert_abs_diff_eq!(a.values.get(0, m), b.values.get(0, m), epsilon = 1e-12);
        }
    }

    #[test]
    fn extrinsic_times_divisor_is_joint() {
        let joint = msg(&[vec![-1.0, -2.5], vec![-0.1, -7.0]], Domain::CodedBit);
        let used = msg(&[vec![-0.3, -1.4], vec![-2.0, -0.2]], Domain::CodedBit);
        let ext = extrinsic_divide(&joint, &used, Role::ExtrinsicPrior).unwrap();
        for t in 0..2 {
            for m in 0..2 {
                assert_abs_diff_eq!(
                    ext.values.get(t, m) + used.values.get(t, m),
                    joint.values.get(t, m),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn zero_probability_divisor() {
        let joint = msg(&[vec![-1.0, -2.0]], Domain::CodedBit);
        let used = msg(&[vec![f64::NEG_INFINITY, 0.0]], Domain::CodedBit);
        assert!(matches!(
            extrinsic_divide(&joint, &used, Role::ExtrinsicPrior),
            Err(Error::ExtrinsicDivision { index: 0, entry: 0 })
        ));
        let joint = msg(&[vec![f64::NEG_INFINITY, -2.0]], Domain::CodedBit);
        let ext = extrinsic_divide(&joint, &used, Role::ExtrinsicPrior).unwrap();
        assert_eq!(ext.values.get(0, 0), f64::NEG_INFINITY);
    }

    #[test]
    fn conditioning_normalises_and_floors() {
        let m = msg(&[vec![0.0, f64::NEG_INFINITY], vec![-3.0, -4.0]], Domain::CodedBit);
        let c = condition(&m);
        for z in c.normalizers() {
            assert_abs_diff_eq!(z, 0.0, epsilon = 1e-12);
        }
        assert!(c.values.get(0, 1) >= EXTRINSIC_FLOOR - 1e-9);
        assert!(c.values.as_slice().iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn bpsk_maps_are_identity() {
        let map = PskMapSpec::gray(2).unwrap();
        let bits = msg(&[vec![-0.2, -1.7], vec![-3.0, -0.05]], Domain::InterleavedBit);
        let sym = bits_to_symbols(&bits, &map).unwrap();
        assert_eq!(sym.values, bits.values);
        assert_eq!(symbols_to_bits(&sym, &map).unwrap().values, bits.values);
    }

    #[test]
    fn delta_bits_give_delta_symbol() {
        let map = PskMapSpec::gray(4).unwrap();
        let ninf = f64::NEG_INFINITY;
        // bits 1,1 -> label 3 -> phase 2
        let bits = msg(&[vec![ninf, 0.0], vec![ninf, 0.0]], Domain::InterleavedBit);
        let sym = bits_to_symbols(&bits, &map).unwrap();
        assert_eq!(sym.values.row(0), &[ninf, ninf, 0.0, ninf]);
        assert!(bits_to_symbols(&msg(&[vec![0.0, 0.0]], Domain::InterleavedBit), &map).is_err());
    }

    #[test]
    fn uniform_round_trip() {
        let map = PskMapSpec::gray(4).unwrap();
        let bits = SoftMessage::uniform(Domain::InterleavedBit, 6, 2);
        let back = symbols_to_bits(&bits_to_symbols(&bits, &map).unwrap(), &map)
            .unwrap()
            .normalized();
        for v in back.values.as_slice() {
            assert_abs_diff_eq!(*v, 0.5f64.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn interleave_round_trip() {
        let pi = crate::tx::make_interleaver(5, 2).unwrap();
        let rows: Vec<Vec<f64>> = (0..5).map(|k| vec![-(k as f64), -1.0]).collect();
        let m = msg(&rows, Domain::CodedBit);
        let i = interleave(&m, &pi).unwrap();
        for k in 0..5 {
            assert_eq!(i.values.row(k), m.values.row(pi.permutation()[k]));
        }
        assert_eq!(deinterleave(&i, &pi).unwrap().values, m.values);
    }
}
