//! Symbol-level MAP detectors and demappers.
//!
//! * [`SuperTrellis`]: joint DPSK + impulsive-noise demapper over `(z, w)`
//!   states, transitions driven by the PSK symbol `x`.
//! * [`in_detect`] / [`psk_in_detect`]: impulsive-noise detector over the
//!   auxiliary `(symbol, w)` trellis, once with a uniform prior for the
//!   separate design and with a symbol prior for the PSK baseline.
//! * [`de_demap`]: `M`-state differential demapper fed with soft `z`.
//! * [`genie_likelihoods`]: per-symbol likelihoods given the true noise
//!   states.

use num_complex::Complex64;

use crate::air::AuxTrellis;
use crate::error::{Error, Result};
use crate::markov_middleton::{MarkovMiddletonParams, NoiseModel};
use crate::trellis::{forward_backward, BranchMetrics, EdgeLabels, LogMatrix, Transition, TrellisSpec};
use crate::tx::psk_point;

use super::soft::{Domain, Role, SoftMessage};

fn check_prior(prior: &SoftMessage, len: usize, order: usize) -> Result<()> {
    if prior.len() != len || prior.alphabet() != order {
        return Err(Error::Dimension(format!(
            "prior is {}×{}, expected {len}×{order}",
            prior.len(),
            prior.alphabet()
        )));
    }
    Ok(())
}

/// `T × (M·W)` likelihood table; column `s · W + w` holds
/// `log p(y_t | symbol s, noise state w)`.
fn likelihood_table(model: &NoiseModel, order: usize, y: &[Complex64]) -> LogMatrix {
    let w = model.num_states();
    let points: Vec<Complex64> = (0..order).map(|i| psk_point(order, i)).collect();
    let mut lik = LogMatrix::filled(y.len(), order * w, 0.0);
    for (t, &yt) in y.iter().enumerate() {
        for (a, v) in lik.row_mut(t).iter_mut().enumerate() {
            *v = model.log_likelihood(yt, points[a / w], a % w);
        }
    }
    lik
}

/// Joint DPSK-IN super-trellis. State `ȧ = z · W + w`; the transition label
/// `x · W + w'` encodes the driving symbol and the next noise state.
#[derive(Debug, Clone)]
pub struct SuperTrellis {
    model: NoiseModel,
    order: usize,
    trellis: TrellisSpec,
    log_chain: Vec<f64>,
    edge_symbol: Vec<usize>,
    by_symbol: EdgeLabels,
    init: Vec<f64>,
}

impl SuperTrellis {
    pub fn new(rx: &MarkovMiddletonParams, order: usize) -> Result<Self> {
        let model = NoiseModel::new(*rx)?;
        let w = model.num_states();
        let n = order * w;
        let mut transitions = Vec::with_capacity(n * n);
        let mut log_chain = Vec::with_capacity(n * n);
        for from in 0..n {
            let (z, wi) = (from / w, from % w);
            for x in 0..order {
                for wj in 0..w {
                    transitions.push(Transition {
                        from,
                        to: ((z + x) % order) * w + wj,
                        label: x * w + wj,
                    });
                    log_chain.push(model.log_transition(wi, wj));
                }
            }
        }
        let trellis = TrellisSpec::new(n, n, transitions)?;
        let edge_symbol: Vec<usize> = trellis.transitions().iter().map(|tr| tr.label / w).collect();
        let by_symbol = EdgeLabels::new(edge_symbol.iter().map(|&x| Some(x)).collect(), order)?;
        // z_0 = 1 is known, w_0 follows the stationary priors
        let mut init = vec![f64::NEG_INFINITY; n];
        init[..w].copy_from_slice(model.log_priors());
        Ok(Self {
            model,
            order,
            trellis,
            log_chain,
            edge_symbol,
            by_symbol,
            init,
        })
    }

    pub fn trellis(&self) -> &TrellisSpec {
        &self.trellis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// `log p(x_t, y_1..y_T)` for every `t` and symbol `x`.
    pub fn demap(&self, y: &[Complex64], prior: &SoftMessage) -> Result<SoftMessage> {
        check_prior(prior, y.len(), self.order)?;
        if y.is_empty() {
            return Err(Error::Dimension("empty frame".into()));
        }
        let metrics = EdgeMetrics {
            lik: likelihood_table(&self.model, self.order, y),
            prior: &prior.values,
            log_chain: &self.log_chain,
            edge_symbol: &self.edge_symbol,
        };
        let term = vec![0.0; self.trellis.num_states()];
        let (mut outs, _) = forward_backward(&self.trellis, &metrics, &self.init, &term, &[&self.by_symbol])?;
        Ok(SoftMessage::new(Role::Joint, Domain::Symbol, outs.remove(0)))
    }
}

/// `log p(y_t | a_{t+1}) + log P(w | w') + log prior_t(symbol)` per edge,
/// shared by the super-trellis and the auxiliary trellis.
struct EdgeMetrics<'a> {
    lik: LogMatrix,
    prior: &'a LogMatrix,
    log_chain: &'a [f64],
    edge_symbol: &'a [usize],
}

impl BranchMetrics for EdgeMetrics<'_> {
    fn num_steps(&self) -> usize {
        self.lik.rows()
    }

    fn fill_step(&self, t: usize, trellis: &TrellisSpec, out: &mut [f64]) {
        let (lik, prior) = (self.lik.row(t), self.prior.row(t));
        for (((o, tr), &lc), &x) in out
            .iter_mut()
            .zip(trellis.transitions())
            .zip(self.log_chain)
            .zip(self.edge_symbol)
        {
            *o = lik[tr.to] + lc + prior[x];
        }
    }
}

/// Joint DPSK-IN demapper (builds the super-trellis for `rx`).
pub fn joint_dpsk_in_demap(
    y: &[Complex64],
    rx: &MarkovMiddletonParams,
    order: usize,
    prior: &SoftMessage,
) -> Result<SoftMessage> {
    SuperTrellis::new(rx, order)?.demap(y, prior)
}

/// Impulsive-noise detector over the auxiliary trellis: the symbol carried
/// by each state is observed directly, with per-step symbol prior `prior`.
/// Returns `log p(s_t, y_1..y_T)` for the carried symbol `s`.
pub fn aux_detect(y: &[Complex64], aux: &AuxTrellis, prior: &SoftMessage) -> Result<SoftMessage> {
    let order = aux.order();
    check_prior(prior, y.len(), order)?;
    if y.is_empty() {
        return Err(Error::Dimension("empty frame".into()));
    }
    let model = aux.model();
    let w = model.num_states();
    let trellis = aux.trellis();
    let log_chain: Vec<f64> = trellis
        .transitions()
        .iter()
        .map(|tr| model.log_transition(tr.from % w, tr.to % w))
        .collect();
    let edge_symbol: Vec<usize> = trellis.transitions().iter().map(|tr| tr.to / w).collect();
    let by_symbol = EdgeLabels::new(edge_symbol.iter().map(|&x| Some(x)).collect(), order)?;
    let metrics = EdgeMetrics {
        lik: likelihood_table(model, order, y),
        prior: &prior.values,
        log_chain: &log_chain,
        edge_symbol: &edge_symbol,
    };
    // a_0: uniform symbol, stationary noise state; the symbol part of a_0
    // does not influence anything downstream
    let init: Vec<f64> = (0..order * w)
        .map(|a| model.log_priors()[a % w] - (order as f64).ln())
        .collect();
    let term = vec![0.0; order * w];
    let (mut outs, _) = forward_backward(trellis, &metrics, &init, &term, &[&by_symbol])?;
    Ok(SoftMessage::new(Role::Joint, Domain::Symbol, outs.remove(0)))
}

/// Separate-design IN detector: `log p(z_t, y_1..y_T)` under a uniform
/// prior on the differential symbols. Run once per frame.
pub fn in_detect(y: &[Complex64], aux: &AuxTrellis) -> Result<SoftMessage> {
    let uniform = SoftMessage::uniform(Domain::DiffSymbol, y.len(), aux.order());
    Ok(aux_detect(y, aux, &uniform)?.with_domain(Domain::DiffSymbol))
}

/// PSK-IN detector for non-differential transmission: `log p(x_t, y)` with
/// the given symbol prior.
pub fn psk_in_detect(y: &[Complex64], aux: &AuxTrellis, prior: &SoftMessage) -> Result<SoftMessage> {
    aux_detect(y, aux, prior)
}

/// `M`-state differential demapper. `z_joint` holds soft information on the
/// differential symbols, `prior` on the PSK symbols; returns
/// `log p(x_t, y_1..y_T)`.
pub fn de_demap(z_joint: &SoftMessage, prior: &SoftMessage) -> Result<SoftMessage> {
    let order = z_joint.alphabet();
    check_prior(prior, z_joint.len(), order)?;
    if z_joint.is_empty() {
        return Err(Error::Dimension("empty frame".into()));
    }
    let trellis = de_trellis(order)?;
    let metrics = DeMetrics {
        z: &z_joint.values,
        prior: &prior.values,
    };
    let mut init = vec![f64::NEG_INFINITY; order];
    init[0] = 0.0;
    let term = vec![0.0; order];
    let labels = EdgeLabels::by_input(&trellis);
    let (mut outs, _) = forward_backward(&trellis, &metrics, &init, &term, &[&labels])?;
    Ok(SoftMessage::new(Role::Joint, Domain::Symbol, outs.remove(0)))
}

fn de_trellis(order: usize) -> Result<TrellisSpec> {
    let transitions = (0..order)
        .flat_map(|l| {
            (0..order).map(move |x| Transition {
                from: l,
                to: (l + x) % order,
                label: x,
            })
        })
        .collect();
    TrellisSpec::new(order, order, transitions)
}

struct DeMetrics<'a> {
    z: &'a LogMatrix,
    prior: &'a LogMatrix,
}

impl BranchMetrics for DeMetrics<'_> {
    fn num_steps(&self) -> usize {
        self.z.rows()
    }

    fn fill_step(&self, t: usize, trellis: &TrellisSpec, out: &mut [f64]) {
        let (z, prior) = (self.z.row(t), self.prior.row(t));
        for (o, tr) in out.iter_mut().zip(trellis.transitions()) {
            *o = z[tr.to] + prior[tr.label];
        }
    }
}

/// Per-symbol likelihoods `log p(y_t | z, w_t)` with the true noise states
/// supplied.
pub fn genie_likelihoods(
    y: &[Complex64],
    states: &[usize],
    rx: &MarkovMiddletonParams,
    order: usize,
) -> Result<SoftMessage> {
    if y.len() != states.len() {
        return Err(Error::Dimension(format!(
            "{} observations, {} states",
            y.len(),
            states.len()
        )));
    }
    let model = NoiseModel::new(*rx)?;
    if states.iter().any(|&s| s >= model.num_states()) {
        return Err(Error::Dimension("noise state outside receiver model".into()));
    }
    let points: Vec<Complex64> = (0..order).map(|i| psk_point(order, i)).collect();
    let mut values = LogMatrix::filled(y.len(), order, 0.0);
    for (t, (&yt, &w)) in y.iter().zip(states).enumerate() {
        for (z, v) in values.row_mut(t).iter_mut().enumerate() {
            *v = model.log_likelihood(yt, points[z], w);
        }
    }
    Ok(SoftMessage::new(Role::Joint, Domain::DiffSymbol, values))
}
