//! Log-domain forward-backward (BCJR) inference over a finite-state trellis.
//!
//! The engine knows nothing about channels or codes. Every detector, demapper
//! and decoder in this crate describes its trellis as a list of labelled
//! transitions and supplies per-step branch metrics through [`BranchMetrics`].
//!
//! Indexing is zero-based: a frame of `T` steps has states `s_0 .. s_T`, and
//! step `t` is the transition `s_t -> s_{t+1}`. Forward and backward tables
//! therefore have `T + 1` rows; row 0 of the forward table is the initial
//! distribution and row `T` of the backward table is the terminal vector.

use crate::error::{Error, Result};

/// Terms more than this many nats below the running maximum are dropped from
/// a log-sum-exp. `exp(-50)` is far below the f64 rounding unit, so the result
/// is unchanged at working precision.
const NEGLIGIBLE: f64 = -50.0;

/// `log Σ exp(v)` with max-shift. Returns `-inf` iff every input is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyReduction);
    }
    Ok(lse(values))
}

/// Infallible variant for internal use on non-empty slices.
#[inline]
pub(crate) fn lse(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values
        .iter()
        .map(|&v| v - max)
        .filter(|&d| d > NEGLIGIBLE)
        .map(f64::exp)
        .sum();
    max + sum.ln()
}

/// Log-sum-exp of `term(e)` over `edges`, evaluated twice instead of
/// collected.
#[inline]
fn lse_over(edges: &[usize], term: impl Fn(usize) -> f64) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &e in edges {
        max = max.max(term(e));
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut sum = 0.0;
    for &e in edges {
        let d = term(e) - max;
        if d > NEGLIGIBLE {
            sum += d.exp();
        }
    }
    max + sum.ln()
}

/// One labelled branch of a trellis section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub label: usize,
}

/// A time-invariant trellis section: state count, input alphabet and the
/// transitions between consecutive states.
#[derive(Debug, Clone)]
pub struct TrellisSpec {
    num_states: usize,
    input_alphabet_size: usize,
    transitions: Vec<Transition>,
    // CSR adjacency, transition indices grouped by destination / origin
    in_offsets: Vec<usize>,
    in_edges: Vec<usize>,
    out_offsets: Vec<usize>,
    out_edges: Vec<usize>,
}

impl TrellisSpec {
    /// Builds a trellis, checking state ranges and that every
    /// `(from_state, input_label)` pair leads to exactly one state.
    pub fn new(num_states: usize, input_alphabet_size: usize, transitions: Vec<Transition>) -> Result<Self> {
        if num_states == 0 || input_alphabet_size == 0 {
            return Err(Error::InvalidTrellis(
                "state count and alphabet size must be positive".into(),
            ));
        }
        let mut seen = vec![false; num_states * input_alphabet_size];
        for tr in &transitions {
            if tr.from >= num_states || tr.to >= num_states {
                return Err(Error::InvalidTrellis(format!(
                    "transition {}->{} outside [0, {num_states})",
                    tr.from, tr.to
                )));
            }
            if tr.label >= input_alphabet_size {
                return Err(Error::InvalidTrellis(format!(
                    "label {} outside input alphabet of size {input_alphabet_size}",
                    tr.label
                )));
            }
            let slot = &mut seen[tr.from * input_alphabet_size + tr.label];
            if *slot {
                return Err(Error::InvalidTrellis(format!(
                    "state {} has two successors for input {}",
                    tr.from, tr.label
                )));
            }
            *slot = true;
        }
        let (in_offsets, in_edges) = csr(num_states, &transitions, |tr| tr.to);
        let (out_offsets, out_edges) = csr(num_states, &transitions, |tr| tr.from);
        Ok(Self {
            num_states,
            input_alphabet_size,
            transitions,
            in_offsets,
            in_edges,
            out_offsets,
            out_edges,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn input_alphabet_size(&self) -> usize {
        self.input_alphabet_size
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// Indices of the transitions entering `state`.
    pub fn incoming(&self, state: usize) -> &[usize] {
        &self.in_edges[self.in_offsets[state]..self.in_offsets[state + 1]]
    }

    /// Indices of the transitions leaving `state`.
    pub fn outgoing(&self, state: usize) -> &[usize] {
        &self.out_edges[self.out_offsets[state]..self.out_offsets[state + 1]]
    }

    /// Index of the transition `from -> to`, if there is exactly one.
    pub fn find(&self, from: usize, to: usize) -> Option<usize> {
        let mut hits = self
            .outgoing(from)
            .iter()
            .copied()
            .filter(|&e| self.transitions[e].to == to);
        match (hits.next(), hits.next()) {
            (Some(e), None) => Some(e),
            _ => None,
        }
    }
}

fn csr(n: usize, transitions: &[Transition], key: impl Fn(&Transition) -> usize) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; n + 1];
    for tr in transitions {
        offsets[key(tr) + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut edges = vec![0usize; transitions.len()];
    for (e, tr) in transitions.iter().enumerate() {
        let k = key(tr);
        edges[fill[k]] = e;
        fill[k] += 1;
    }
    (offsets, edges)
}

/// Dense row-major matrix of log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LogMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Drops every row from `rows` on.
    pub fn truncate_rows(&mut self, rows: usize) {
        self.rows = self.rows.min(rows);
        self.data.truncate(self.rows * self.cols);
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    /// Index of the largest entry in each row, ties broken toward the lowest
    /// column.
    pub fn argmax_rows(&self) -> Vec<usize> {
        self.iter_rows()
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    /// Shifts every row so that it log-sums to zero. Rows that are entirely
    /// `-inf` are left untouched.
    pub fn normalize_rows(&mut self) {
        let cols = self.cols;
        for row in self.data.chunks_mut(cols.max(1)) {
            let z = lse(row);
            if z.is_finite() {
                row.iter_mut().for_each(|v| *v -= z);
            }
        }
    }
}

/// Source of per-step branch metrics.
///
/// `fill_step` writes `log γ_t(e)` for every transition `e` of the trellis
/// (in [`TrellisSpec::transitions`] order). Forbidden branches are `-inf`.
pub trait BranchMetrics {
    fn num_steps(&self) -> usize;
    fn fill_step(&self, t: usize, trellis: &TrellisSpec, out: &mut [f64]);
}

/// Explicit `T × N × N` table; entry `[t][i][j]` is the metric of `i -> j`
/// at step `t`.
#[derive(Debug, Clone)]
pub struct BranchMetricTable {
    steps: usize,
    num_states: usize,
    values: Vec<f64>,
}

impl BranchMetricTable {
    pub fn new(steps: usize, num_states: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != steps * num_states * num_states {
            return Err(Error::Dimension(format!(
                "metric table has {} entries, expected {steps}×{num_states}×{num_states}",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Dimension("metric table contains NaN".into()));
        }
        Ok(Self {
            steps,
            num_states,
            values,
        })
    }

    pub fn from_fn(steps: usize, num_states: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(steps * num_states * num_states);
        for t in 0..steps {
            for i in 0..num_states {
                for j in 0..num_states {
                    values.push(f(t, i, j));
                }
            }
        }
        Self {
            steps,
            num_states,
            values,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn get(&self, t: usize, from: usize, to: usize) -> f64 {
        self.values[(t * self.num_states + from) * self.num_states + to]
    }

    /// Adds `c` to every entry of step `t`.
    pub fn shift_step(&mut self, t: usize, c: f64) {
        let n2 = self.num_states * self.num_states;
        self.values[t * n2..(t + 1) * n2].iter_mut().for_each(|v| *v += c);
    }
}

impl BranchMetrics for BranchMetricTable {
    fn num_steps(&self) -> usize {
        self.steps
    }

    fn fill_step(&self, t: usize, trellis: &TrellisSpec, out: &mut [f64]) {
        for (slot, tr) in out.iter_mut().zip(trellis.transitions()) {
            *slot = self.get(t, tr.from, tr.to);
        }
    }
}

fn check_metrics<M: BranchMetrics + ?Sized>(metrics: &M) -> Result<()> {
    if metrics.num_steps() == 0 {
        return Err(Error::Dimension("trellis with zero steps".into()));
    }
    Ok(())
}

fn check_boundary(trellis: &TrellisSpec, v: &[f64], what: &str) -> Result<()> {
    if v.len() != trellis.num_states() {
        return Err(Error::Dimension(format!(
            "{what} vector has {} entries, trellis has {} states",
            v.len(),
            trellis.num_states()
        )));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Dimension(format!("{what} vector contains NaN")));
    }
    Ok(())
}

/// Forward recursion. Returns a `(T + 1) × N` table whose row `t` is
/// `log p(s_t, y_1..y_t)`; row 0 is `init`.
pub fn forward<M: BranchMetrics + ?Sized>(trellis: &TrellisSpec, metrics: &M, init: &[f64]) -> Result<LogMatrix> {
    check_metrics(metrics)?;
    check_boundary(trellis, init, "initial")?;
    let n = trellis.num_states();
    let steps = metrics.num_steps();
    let mut alpha = LogMatrix::filled(steps + 1, n, f64::NEG_INFINITY);
    alpha.row_mut(0).copy_from_slice(init);
    let mut g = vec![0.0; trellis.num_transitions()];
    for t in 0..steps {
        metrics.fill_step(t, trellis, &mut g);
        let (done, rest) = alpha.data.split_at_mut((t + 1) * n);
        forward_step(trellis, &g, &done[t * n..], &mut rest[..n]);
    }
    Ok(alpha)
}

#[inline]
fn forward_step(trellis: &TrellisSpec, g: &[f64], prev: &[f64], next: &mut [f64]) {
    for (j, slot) in next.iter_mut().enumerate() {
        *slot = lse_over(trellis.incoming(j), |e| prev[trellis.transitions[e].from] + g[e]);
    }
}

/// Backward recursion. Returns a `(T + 1) × N` table whose row `t` is
/// `log p(y_{t+1}..y_T | s_t)`; row `T` is `term`.
pub fn backward<M: BranchMetrics + ?Sized>(trellis: &TrellisSpec, metrics: &M, term: &[f64]) -> Result<LogMatrix> {
    check_metrics(metrics)?;
    check_boundary(trellis, term, "terminal")?;
    let n = trellis.num_states();
    let steps = metrics.num_steps();
    let mut beta = LogMatrix::filled(steps + 1, n, f64::NEG_INFINITY);
    beta.row_mut(steps).copy_from_slice(term);
    let mut g = vec![0.0; trellis.num_transitions()];
    for t in (0..steps).rev() {
        metrics.fill_step(t, trellis, &mut g);
        let (head, tail) = beta.data.split_at_mut((t + 1) * n);
        let next = &tail[..n];
        for (i, slot) in head[t * n..].iter_mut().enumerate() {
            *slot = lse_over(trellis.outgoing(i), |e| g[e] + next[trellis.transitions[e].to]);
        }
    }
    Ok(beta)
}

fn check_tables(trellis: &TrellisSpec, steps: usize, alpha: &LogMatrix, beta: &LogMatrix) -> Result<()> {
    let n = trellis.num_states();
    for (name, m) in [("forward", alpha), ("backward", beta)] {
        if m.rows() != steps + 1 || m.cols() != n {
            return Err(Error::Dimension(format!(
                "{name} table is {}×{}, expected {}×{n}",
                m.rows(),
                m.cols(),
                steps + 1
            )));
        }
    }
    Ok(())
}

/// `log p(s_t, s_{t+1}, y_1..y_T)` for every step and transition.
#[derive(Debug, Clone)]
pub struct PosteriorJoint {
    values: LogMatrix,
}

impl PosteriorJoint {
    pub fn num_steps(&self) -> usize {
        self.values.rows()
    }

    /// Per-transition values at step `t`, in trellis transition order.
    pub fn step(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    /// Value for the branch `from -> to` at step `t`; `-inf` if the trellis
    /// has no such branch.
    pub fn at(&self, trellis: &TrellisSpec, t: usize, from: usize, to: usize) -> f64 {
        let row = self.values.row(t);
        let terms: Vec<f64> = trellis
            .outgoing(from)
            .iter()
            .filter(|&&e| trellis.transitions[e].to == to)
            .map(|&e| row[e])
            .collect();
        if terms.is_empty() {
            f64::NEG_INFINITY
        } else {
            lse(&terms)
        }
    }

    /// `log p(y_1..y_T)` evaluated at step `t`.
    pub fn log_evidence(&self, t: usize) -> f64 {
        lse(self.values.row(t))
    }
}

/// Combines forward, metric and backward terms into the branch posterior.
pub fn posterior_joint<M: BranchMetrics + ?Sized>(
    trellis: &TrellisSpec,
    metrics: &M,
    alpha: &LogMatrix,
    beta: &LogMatrix,
) -> Result<PosteriorJoint> {
    let steps = metrics.num_steps();
    check_tables(trellis, steps, alpha, beta)?;
    let mut values = LogMatrix::filled(steps, trellis.num_transitions(), f64::NEG_INFINITY);
    for t in 0..steps {
        let out = values.row_mut(t);
        metrics.fill_step(t, trellis, out);
        let (a, b) = (alpha.row(t), beta.row(t + 1));
        for (v, tr) in out.iter_mut().zip(trellis.transitions()) {
            *v += a[tr.from] + b[tr.to];
        }
    }
    Ok(PosteriorJoint { values })
}

/// Assignment of transitions to output labels used for marginalisation.
/// `None` marks a transition that carries no label; it must never have
/// non-zero posterior mass.
#[derive(Debug, Clone)]
pub struct EdgeLabels {
    labels: Vec<Option<usize>>,
    num_labels: usize,
}

impl EdgeLabels {
    pub fn new(labels: Vec<Option<usize>>, num_labels: usize) -> Result<Self> {
        if labels.iter().flatten().any(|&l| l >= num_labels) {
            return Err(Error::Dimension("edge label out of range".into()));
        }
        Ok(Self { labels, num_labels })
    }

    pub fn from_fn(trellis: &TrellisSpec, num_labels: usize, f: impl Fn(&Transition) -> Option<usize>) -> Result<Self> {
        Self::new(trellis.transitions().iter().map(f).collect(), num_labels)
    }

    /// Labels each transition by its input label.
    pub fn by_input(trellis: &TrellisSpec) -> Self {
        Self {
            labels: trellis.transitions().iter().map(|t| Some(t.label)).collect(),
            num_labels: trellis.input_alphabet_size(),
        }
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    fn check(&self, trellis: &TrellisSpec) -> Result<()> {
        if self.labels.len() != trellis.num_transitions() {
            return Err(Error::Dimension(format!(
                "{} edge labels for {} transitions",
                self.labels.len(),
                trellis.num_transitions()
            )));
        }
        Ok(())
    }

    /// Per-label log-sum of `joint_row` into `out`, using `sums` as scratch.
    fn accumulate(&self, t: usize, joint_row: &[f64], out: &mut [f64], sums: &mut [f64]) -> Result<()> {
        out.fill(f64::NEG_INFINITY);
        for (e, (&v, l)) in joint_row.iter().zip(&self.labels).enumerate() {
            match *l {
                Some(l) => out[l] = out[l].max(v),
                None if v > f64::NEG_INFINITY => return Err(Error::UnlabeledTransition { step: t, transition: e }),
                None => {}
            }
        }
        sums.fill(0.0);
        for (&v, l) in joint_row.iter().zip(&self.labels) {
            if let Some(l) = *l {
                let d = v - out[l];
                if d > NEGLIGIBLE {
                    sums[l] += d.exp();
                }
            }
        }
        for (o, s) in out.iter_mut().zip(sums.iter()) {
            if *o > f64::NEG_INFINITY {
                *o += s.ln();
            }
        }
        Ok(())
    }
}

/// `out[t][m] = log Σ_{e labelled m} exp(joint[t][e])`.
pub fn marginalize_by_label(joint: &PosteriorJoint, trellis: &TrellisSpec, labels: &EdgeLabels) -> Result<LogMatrix> {
    labels.check(trellis)?;
    if joint.values.cols() != trellis.num_transitions() {
        return Err(Error::Dimension("joint does not match trellis".into()));
    }
    let mut out = LogMatrix::filled(joint.num_steps(), labels.num_labels, f64::NEG_INFINITY);
    let mut sums = vec![0.0; labels.num_labels];
    for t in 0..joint.num_steps() {
        labels.accumulate(t, joint.step(t), out.row_mut(t), &mut sums)?;
    }
    Ok(out)
}

/// Fused posterior + marginalisation that never materialises the full
/// `T × E` joint. Returns one `T × |labels|` table per labelling.
pub fn label_posteriors<M: BranchMetrics + ?Sized>(
    trellis: &TrellisSpec,
    metrics: &M,
    alpha: &LogMatrix,
    beta: &LogMatrix,
    labelings: &[&EdgeLabels],
) -> Result<Vec<LogMatrix>> {
    let steps = metrics.num_steps();
    check_tables(trellis, steps, alpha, beta)?;
    for l in labelings {
        l.check(trellis)?;
    }
    let mut outs: Vec<LogMatrix> = labelings
        .iter()
        .map(|l| LogMatrix::filled(steps, l.num_labels, f64::NEG_INFINITY))
        .collect();
    let max_labels = labelings.iter().map(|l| l.num_labels).max().unwrap_or(0);
    let mut sums = vec![0.0; max_labels];
    let mut row = vec![0.0; trellis.num_transitions()];
    for t in 0..steps {
        metrics.fill_step(t, trellis, &mut row);
        let (a, b) = (alpha.row(t), beta.row(t + 1));
        for (v, tr) in row.iter_mut().zip(trellis.transitions()) {
            *v += a[tr.from] + b[tr.to];
        }
        for (l, out) in labelings.iter().zip(outs.iter_mut()) {
            l.accumulate(t, &row, out.row_mut(t), &mut sums[..l.num_labels])?;
        }
    }
    Ok(outs)
}

/// `log p(y_1..y_T)` from the forward recursion alone, keeping only two
/// rows in memory. Equivalent to log-summing the last row of [`forward`].
pub fn forward_evidence<M: BranchMetrics + ?Sized>(trellis: &TrellisSpec, metrics: &M, init: &[f64]) -> Result<f64> {
    check_metrics(metrics)?;
    check_boundary(trellis, init, "initial")?;
    let n = trellis.num_states();
    let mut prev = init.to_vec();
    let mut next = vec![f64::NEG_INFINITY; n];
    let mut g = vec![0.0; trellis.num_transitions()];
    for t in 0..metrics.num_steps() {
        metrics.fill_step(t, trellis, &mut g);
        forward_step(trellis, &g, &prev, &mut next);
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(lse(&prev))
}

/// Runs both recursions and returns per-label posteriors together with
/// `log p(y_1..y_T)`.
pub fn forward_backward<M: BranchMetrics + ?Sized>(
    trellis: &TrellisSpec,
    metrics: &M,
    init: &[f64],
    term: &[f64],
    labelings: &[&EdgeLabels],
) -> Result<(Vec<LogMatrix>, f64)> {
    let alpha = forward(trellis, metrics, init)?;
    let beta = backward(trellis, metrics, term)?;
    let last = metrics.num_steps();
    let evidence = lse(&alpha
        .row(last)
        .iter()
        .zip(beta.row(last))
        .map(|(a, b)| a + b)
        .collect::<Vec<_>>());
    let outs = label_posteriors(trellis, metrics, &alpha, &beta, labelings)?;
    Ok((outs, evidence))
}
