//! Browser bindings: noise traces, single AIR points and the complexity
//! table. Everything runs on the page's thread, so AIR lengths are capped.

use turbo_dpsk_in::air::estimate_air;
use turbo_dpsk_in::harness::{complexity_count, Architecture};
use turbo_dpsk_in::markov_middleton::{sample_noise, snr_to_background_var};
use turbo_dpsk_in::MarkovMiddletonParams;
use wasm_bindgen::prelude::*;

const MAX_AIR_SYMBOLS: usize = 200_000;

fn params(w: usize, a: f64, lambda: f64, r: f64, snr_db: f64) -> Result<MarkovMiddletonParams, JsError> {
    Ok(MarkovMiddletonParams::new(
        w,
        a,
        lambda,
        r,
        snr_to_background_var(snr_db),
    )?)
}

#[wasm_bindgen]
pub struct NoiseTrace {
    states: Vec<u32>,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[wasm_bindgen]
impl NoiseTrace {
    #[wasm_bindgen(getter)]
    pub fn states(&self) -> Vec<u32> {
        self.states.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn re(&self) -> Vec<f64> {
        self.re.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn im(&self) -> Vec<f64> {
        self.im.clone()
    }
}

/// A seeded realization of `len` noise samples.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn noise_trace(
    w: usize,
    a: f64,
    lambda: f64,
    r: f64,
    snr_db: f64,
    len: usize,
    seed: u64,
) -> Result<NoiseTrace, JsError> {
    let noise = sample_noise(&params(w, a, lambda, r, snr_db)?, len, seed)?;
    Ok(NoiseTrace {
        states: noise.states.iter().map(|&s| s as u32).collect(),
        re: noise.samples.iter().map(|n| n.re).collect(),
        im: noise.samples.iter().map(|n| n.im).collect(),
    })
}

/// Matched AIR in bits per symbol, or mismatched when `rx_w` or `rx_r`
/// differ from the channel.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn air_point(
    order: usize,
    w: usize,
    a: f64,
    lambda: f64,
    r: f64,
    rx_w: usize,
    rx_r: f64,
    snr_db: f64,
    seq_length: usize,
    seed: u64,
) -> Result<f64, JsError> {
    if seq_length > MAX_AIR_SYMBOLS {
        return Err(JsError::new(&format!(
            "at most {MAX_AIR_SYMBOLS} symbols in the browser"
        )));
    }
    let channel = params(w, a, lambda, r, snr_db)?;
    let receiver = params(rx_w, a, lambda, rx_r, snr_db)?;
    Ok(estimate_air(&channel, &receiver, order, snr_db, seq_length, 1, seed)?.air)
}

/// `[joint, separate]` multiplications per symbol.
#[wasm_bindgen]
pub fn complexity(order: u32, w: u32, memory: u32, iterations: u32) -> Vec<f64> {
    [Architecture::Joint, Architecture::Separate]
        .into_iter()
        .map(|arch| complexity_count(order as u64, w as u64, memory, iterations as u64, arch) as f64)
        .collect()
}
