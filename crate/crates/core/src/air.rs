//! Simulation-based achievable information rate for PSK over the
//! Markov-Middleton channel.
//!
//! The estimator runs two forward recursions over the auxiliary trellis whose
//! states are `(symbol, noise state)` pairs: one for `log p(y)` and one with
//! the transmitted symbols pinned for `log p(y | x)`. With receiver
//! parameters different from the channel this is the auxiliary-channel lower
//! bound (mismatched decoding).

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov_middleton::{snr_to_background_var, MarkovMiddletonParams, NoiseModel};
use crate::rng;
use crate::trellis::{forward_evidence, BranchMetrics, LogMatrix, Transition, TrellisSpec};
use crate::tx::psk_point;

/// Product trellis over `(x, w)`; state index is `x · W + w`.
#[derive(Debug, Clone)]
pub struct AuxTrellis {
    model: NoiseModel,
    order: usize,
    points: Vec<Complex64>,
    trellis: TrellisSpec,
    log_trans: Vec<f64>,
    init: Vec<f64>,
}

/// Builds the auxiliary trellis for receiver parameters `rx` and an
/// `order`-point PSK alphabet with uniform symbol prior.
pub fn build_aux_trellis(rx: &MarkovMiddletonParams, order: usize) -> Result<AuxTrellis> {
    if order == 0 {
        return Err(Error::InvalidConfig("PSK order must be positive".into()));
    }
    let model = NoiseModel::new(*rx)?;
    let w = model.num_states();
    let n = order * w;
    let log_px = -(order as f64).ln();
    let mut transitions = Vec::with_capacity(n * n);
    let mut log_trans = Vec::with_capacity(n * n);
    for from in 0..n {
        for to in 0..n {
            // label = destination state, so (from, label) is deterministic
            transitions.push(Transition { from, to, label: to });
            log_trans.push(model.log_transition(from % w, to % w) + log_px);
        }
    }
    let trellis = TrellisSpec::new(n, n, transitions)?;
    let init = (0..n).map(|a| model.log_priors()[a % w] + log_px).collect();
    Ok(AuxTrellis {
        points: (0..order).map(|i| psk_point(order, i)).collect(),
        model,
        order,
        trellis,
        log_trans,
        init,
    })
}

impl AuxTrellis {
    pub fn num_states(&self) -> usize {
        self.trellis.num_states()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn trellis(&self) -> &TrellisSpec {
        &self.trellis
    }

    pub fn symbol_of(&self, state: usize) -> usize {
        state / self.model.num_states()
    }

    pub fn noise_state_of(&self, state: usize) -> usize {
        state % self.model.num_states()
    }

    /// `p(a_t = to | a_{t-1} = from)`.
    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        self.log_trans[from * self.num_states() + to].exp()
    }

    /// Initial log distribution over `a_0`.
    pub fn init(&self) -> &[f64] {
        &self.init
    }

    /// `T × |A|` table of `log p(y_t | a)`.
    pub fn likelihoods(&self, y: &[Complex64]) -> LogMatrix {
        let w = self.model.num_states();
        let mut out = LogMatrix::filled(y.len(), self.num_states(), 0.0);
        for (t, &yt) in y.iter().enumerate() {
            for (a, v) in out.row_mut(t).iter_mut().enumerate() {
                *v = self.model.log_likelihood(yt, self.points[a / w], a % w);
            }
        }
        out
    }
}

struct AuxMetrics<'a> {
    aux: &'a AuxTrellis,
    lik: LogMatrix,
    pinned: Option<&'a [usize]>,
}

impl BranchMetrics for AuxMetrics<'_> {
    fn num_steps(&self) -> usize {
        self.lik.rows()
    }

    fn fill_step(&self, t: usize, trellis: &TrellisSpec, out: &mut [f64]) {
        let lik = self.lik.row(t);
        for ((o, tr), &lt) in out.iter_mut().zip(trellis.transitions()).zip(&self.aux.log_trans) {
            *o = lik[tr.to] + lt;
        }
        if let Some(x) = self.pinned {
            let w = self.aux.model.num_states();
            for (o, tr) in out.iter_mut().zip(trellis.transitions()) {
                if tr.to / w != x[t] {
                    *o = f64::NEG_INFINITY;
                }
            }
        }
    }
}

/// `log p(y_1..y_T)` in nats.
pub fn log_p_y(y: &[Complex64], aux: &AuxTrellis) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Dimension("empty frame".into()));
    }
    let metrics = AuxMetrics {
        aux,
        lik: aux.likelihoods(y),
        pinned: None,
    };
    forward_evidence(&aux.trellis, &metrics, &aux.init)
}

/// `log p(y_1..y_T | x_1..x_T)` in nats; `x` holds phase indices.
pub fn log_p_y_given_x(y: &[Complex64], x: &[usize], aux: &AuxTrellis) -> Result<f64> {
    if y.is_empty() || y.len() != x.len() {
        return Err(Error::Dimension(format!(
            "{} observations, {} symbols",
            y.len(),
            x.len()
        )));
    }
    if x.iter().any(|&p| p >= aux.order) {
        return Err(Error::Dimension("symbol outside constellation".into()));
    }
    let metrics = AuxMetrics {
        aux,
        lik: aux.likelihoods(y),
        pinned: Some(x),
    };
    let joint = forward_evidence(&aux.trellis, &metrics, &aux.init)?;
    Ok(joint + y.len() as f64 * (aux.order as f64).ln())
}

/// Result of [`estimate_air`].
#[derive(Debug, Clone, Serialize)]
pub struct AirEstimate {
    /// Mean rate in bits per symbol.
    pub air: f64,
    /// Standard error of the mean across sequences; NaN for one sequence.
    pub std_error: f64,
    pub per_sequence: Vec<f64>,
    pub n_sequences: usize,
    pub seq_length: usize,
    pub order: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub channel_params: MarkovMiddletonParams,
    pub receiver_params: MarkovMiddletonParams,
}

/// Monte-Carlo rate estimate. The SNR fixes `σ₀²` for both the channel and
/// the receiver; every other receiver parameter may differ from the channel.
///
/// Sequence `i` draws its symbols and noise from seed
/// `derive_seed(seed, i)`, so the value does not depend on thread count and
/// grid points evaluated with the same seed share random numbers.
#[allow(clippy::too_many_arguments)]
pub fn estimate_air(
    channel: &MarkovMiddletonParams,
    receiver: &MarkovMiddletonParams,
    order: usize,
    snr_db: f64,
    seq_length: usize,
    n_sequences: usize,
    seed: u64,
) -> Result<AirEstimate> {
    if seq_length == 0 || n_sequences == 0 {
        return Err(Error::InvalidConfig(
            "sequence length and count must be positive".into(),
        ));
    }
    let var = snr_to_background_var(snr_db);
    let channel = channel.with_background_var(var);
    let receiver = receiver.with_background_var(var);
    let ch_model = NoiseModel::new(channel)?;
    let aux = build_aux_trellis(&receiver, order)?;

    let per_sequence = (0..n_sequences)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive_seed(seed, i as u64);
            let mut sym_rng = rng::stream_rng(s, 0);
            let x: Vec<usize> = (0..seq_length).map(|_| sym_rng.random_range(0..order)).collect();
            let noise = ch_model.sample(seq_length, &mut rng::stream_rng(s, 1));
            let y: Vec<Complex64> = x
                .iter()
                .zip(&noise.samples)
                .map(|(&p, n)| psk_point(order, p) + n)
                .collect();
            let cond = log_p_y_given_x(&y, &x, &aux)?;
            let marg = log_p_y(&y, &aux)?;
            Ok((cond - marg) / seq_length as f64 / std::f64::consts::LN_2)
        })
        .collect::<Result<Vec<f64>>>()?;

    let (air, std_error) = mean_and_std_error(&per_sequence);
    Ok(AirEstimate {
        air,
        std_error,
        per_sequence,
        n_sequences,
        seq_length,
        order,
        snr_db,
        seed,
        channel_params: channel,
        receiver_params: receiver,
    })
}

pub(crate) fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
