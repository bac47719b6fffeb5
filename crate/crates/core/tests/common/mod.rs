//! Brute-force reference computations. Everything here enumerates paths
//! explicitly in the linear domain and shares no inference code with the
//! crate.

#![allow(dead_code)]

use num_complex::Complex64;
use turbo_dpsk_in::MarkovMiddletonParams;

/// Every index vector in `0..base` of length `len`, in odometer order.
pub fn sequences(base: usize, len: usize) -> Vec<Vec<usize>> {
    let total = base.pow(len as u32);
    (0..total)
        .map(|mut k| {
            let mut v = vec![0; len];
            for slot in v.iter_mut() {
                *slot = k % base;
                k /= base;
            }
            v
        })
        .collect()
}

/// Truncated Poisson priors, per-state variances and transition matrix,
/// written out from the model definition.
pub struct RefModel {
    pub prior: Vec<f64>,
    pub var: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
}

impl RefModel {
    pub fn new(p: &MarkovMiddletonParams) -> Self {
        let w = p.num_states;
        let mut weights = Vec::with_capacity(w);
        let mut fact = 1.0;
        for j in 0..w {
            if j > 0 {
                fact *= j as f64;
            }
            weights.push((-p.impulsive_index).exp() * p.impulsive_index.powi(j as i32) / fact);
        }
        let total: f64 = weights.iter().sum();
        let prior: Vec<f64> = weights.iter().map(|v| v / total).collect();
        let var = (0..w)
            .map(|j| (1.0 + j as f64 * p.power_ratio / p.impulsive_index) * p.background_var)
            .collect();
        let trans = (0..w)
            .map(|i| {
                (0..w)
                    .map(|j| if i == j { p.correlation } else { 0.0 } + (1.0 - p.correlation) * prior[j])
                    .collect()
            })
            .collect();
        Self { prior, var, trans }
    }

    /// `p(w_1..w_T)` for a noise-state path starting from the stationary law.
    pub fn path_prob(&self, w: &[usize]) -> f64 {
        let mut p = self.prior[w[0]];
        for pair in w.windows(2) {
            p *= self.trans[pair[0]][pair[1]];
        }
        p
    }
}

pub fn point(order: usize, phase: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase as f64 / order as f64)
}

/// Circularly-symmetric complex Gaussian density with total variance `var`.
pub fn density(y: Complex64, x: Complex64, var: f64) -> f64 {
    (-(y - x).norm_sqr() / var).exp() / (std::f64::consts::PI * var)
}

pub fn ln_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.into_iter().map(|r| r.into_iter().map(f64::ln).collect()).collect()
}

/// `log p(x_t = m, y)` for differentially encoded symbols (`z_0` = phase 0)
/// over Markov-Middleton noise, with per-step symbol priors `prior` (linear).
pub fn joint_demap(y: &[Complex64], params: &MarkovMiddletonParams, order: usize, prior: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let model = RefModel::new(params);
    let t_len = y.len();
    let w_paths = sequences(params.num_states, t_len);
    let mut out = vec![vec![0.0; order]; t_len];
    for x in sequences(order, t_len) {
        let mut z = 0;
        let mut sym_weight = 1.0;
        let mut zs = Vec::with_capacity(t_len);
        for (t, &xt) in x.iter().enumerate() {
            z = (z + xt) % order;
            zs.push(z);
            sym_weight *= prior[t][xt];
        }
        let noise: f64 = w_paths
            .iter()
            .map(|w| {
                model.path_prob(w)
                    * (0..t_len)
                        .map(|t| density(y[t], point(order, zs[t]), model.var[w[t]]))
                        .product::<f64>()
            })
            .sum();
        for (t, &xt) in x.iter().enumerate() {
            out[t][xt] += sym_weight * noise;
        }
    }
    ln_rows(out)
}

/// `log p(s_t = m, y)` when the transmitted symbols `s_t` are observed
/// directly (no differential encoding), with per-step priors (linear).
pub fn direct_detect(
    y: &[Complex64],
    params: &MarkovMiddletonParams,
    order: usize,
    prior: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let model = RefModel::new(params);
    let t_len = y.len();
    let w_paths = sequences(params.num_states, t_len);
    let mut out = vec![vec![0.0; order]; t_len];
    for s in sequences(order, t_len) {
        let sym_weight: f64 = (0..t_len).map(|t| prior[t][s[t]]).product();
        let noise: f64 = w_paths
            .iter()
            .map(|w| {
                model.path_prob(w)
                    * (0..t_len)
                        .map(|t| density(y[t], point(order, s[t]), model.var[w[t]]))
                        .product::<f64>()
            })
            .sum();
        for (t, &st) in s.iter().enumerate() {
            out[t][st] += sym_weight * noise;
        }
    }
    ln_rows(out)
}

/// Differential demapping from soft `z` information (log) and symbol priors
/// (log): `log Σ_x Π_t exp(z_log[t][z_t] + prior_log[t][x_t])`.
pub fn de_demap(z_log: &[Vec<f64>], prior_log: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let t_len = z_log.len();
    let order = z_log[0].len();
    let mut out = vec![vec![0.0; order]; t_len];
    for x in sequences(order, t_len) {
        let mut z = 0;
        let mut w = 1.0;
        for (t, &xt) in x.iter().enumerate() {
            z = (z + xt) % order;
            w *= (z_log[t][z] + prior_log[t][xt]).exp();
        }
        for (t, &xt) in x.iter().enumerate() {
            out[t][xt] += w;
        }
    }
    ln_rows(out)
}

/// Feed-forward encoder written as explicit tap sums: output `i` at step
/// `k` is the parity of `g_i`'s taps applied to `b_k, b_{k-1}, .., b_{k-L}`
/// (most significant tap on `b_k`). Appends `L` zero tail bits.
pub fn encode(memory: usize, generators: &[u32], bits: &[u8]) -> Vec<u8> {
    let mut padded = bits.to_vec();
    padded.extend(std::iter::repeat_n(0, memory));
    let mut out = Vec::new();
    for k in 0..padded.len() {
        for &g in generators {
            let mut acc = 0;
            for j in 0..=memory {
                let tap = (g >> (memory - j)) & 1;
                let b = if k >= j { padded[k - j] } else { 0 };
                acc ^= tap as u8 & b;
            }
            out.push(acc);
        }
    }
    out
}

/// MAP decoding by enumerating all `2^K` information words. `lik` holds a
/// `[p(c = 0), p(c = 1)]` log pair per coded bit. Returns the joints over
/// every encoder input (tail included) and every coded bit, each input
/// weighted by `1/2`.
pub fn decode(memory: usize, generators: &[u32], info_len: usize, lik: &[[f64; 2]]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let steps = info_len + memory;
    let mut info = vec![vec![0.0; 2]; steps];
    let mut coded = vec![vec![0.0; 2]; lik.len()];
    for word in sequences(2, info_len) {
        let bits: Vec<u8> = word.iter().map(|&b| b as u8).collect();
        let c = encode(memory, generators, &bits);
        let w: f64 =
            0.5f64.powi(steps as i32) * c.iter().zip(lik).map(|(&ci, l)| l[ci as usize].exp()).product::<f64>();
        for k in 0..steps {
            let b = if k < info_len { bits[k] } else { 0 };
            info[k][b as usize] += w;
        }
        for (k, &ci) in c.iter().enumerate() {
            coded[k][ci as usize] += w;
        }
    }
    (ln_rows(info), ln_rows(coded))
}

/// Sum-product on a generic trellis given as an `N × N` metric table per step
/// (`-inf` = no branch): log α, log β and log branch joints by explicit path
/// enumeration over `N^(T+1)` state sequences.
pub struct PathSums {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub joint: Vec<Vec<Vec<f64>>>,
    pub evidence: f64,
}

pub fn path_sums(n: usize, metrics: &[Vec<Vec<f64>>], init: &[f64], term: &[f64]) -> PathSums {
    let t_len = metrics.len();
    let mut alpha = vec![vec![0.0; n]; t_len + 1];
    let mut beta = vec![vec![0.0; n]; t_len + 1];
    let mut joint = vec![vec![vec![0.0; n]; n]; t_len];
    let mut evidence = 0.0;
    for s in sequences(n, t_len + 1) {
        let mut prefix = vec![init[s[0]]];
        for t in 0..t_len {
            prefix.push(prefix[t] + metrics[t][s[t]][s[t + 1]]);
        }
        let mut suffix = vec![0.0; t_len + 1];
        suffix[t_len] = term[s[t_len]];
        for t in (0..t_len).rev() {
            suffix[t] = suffix[t + 1] + metrics[t][s[t]][s[t + 1]];
        }
        let total = prefix[t_len] + term[s[t_len]];
        evidence += total.exp();
        for t in 0..=t_len {
            // each prefix (suffix) is counted once per completion, so weight
            // by the number of completions
            let completions = (n as f64).powi((t_len - t) as i32);
            alpha[t][s[t]] += prefix[t].exp() / completions;
            let prefixes = (n as f64).powi(t as i32);
            beta[t][s[t]] += suffix[t].exp() / prefixes;
        }
        for t in 0..t_len {
            joint[t][s[t]][s[t + 1]] += total.exp();
        }
    }
    PathSums {
        alpha: ln_rows(alpha),
        beta: ln_rows(beta),
        joint: joint.into_iter().map(ln_rows).collect(),
        evidence: evidence.ln(),
    }
}

/// `max |a - b|` over matching entries, treating equal infinities as equal.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        assert_eq!(ra.len(), rb.len());
        for (&x, &y) in ra.iter().zip(rb) {
            if x == y {
                continue;
            }
            worst = worst.max((x - y).abs());
        }
    }
    assert_eq!(a.len(), b.len());
    worst
}

pub fn normalize_log(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z = m + r.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            r.iter().map(|v| v - z).collect()
        })
        .collect()
}
