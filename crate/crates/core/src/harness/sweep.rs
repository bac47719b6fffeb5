//! Seeded Monte-Carlo sweeps.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::air::{estimate_air, AirEstimate};
use crate::error::{Error, Result};
use crate::markov_middleton::{sample_noise, MarkovMiddletonParams, NoiseModel, NoiseRealization};
use crate::receivers::{Design, TurboReceiver};
use crate::rng::{derive_seed, stream_rng};
use crate::tx::{apply_channel, differential_encode, make_interleaver, ConvCodeSpec, Interleaver, PskMapSpec};

use super::complexity::{complexity_count, Architecture};
use super::config::{Experiment, SimConfig};
use super::output::SweepResult;

fn expect(cfg: &SimConfig, kind: Experiment) -> Result<()> {
    cfg.validate()?;
    if cfg.experiment != kind {
        return Err(Error::InvalidConfig(format!(
            "config describes {:?}, not {kind:?}",
            cfg.experiment
        )));
    }
    Ok(())
}

/// One AIR estimate per `(r, Lambda, SNR)` grid point. Every point uses the
/// master seed, so points share symbols and noise uniforms.
pub fn run_air_sweep(cfg: &SimConfig) -> Result<Vec<AirEstimate>> {
    expect(cfg, Experiment::AirSweep)?;
    let mut out = Vec::new();
    for point in cfg.grid_points() {
        for &snr in &cfg.snr_db {
            out.push(estimate_air(
                &point.channel,
                &point.receiver,
                cfg.order,
                snr,
                cfg.seq_length,
                cfg.n_sequences,
                cfg.seed,
            )?);
        }
    }
    Ok(out)
}

/// Everything the transmitter and receiver share for one sweep.
#[derive(Debug, Clone)]
pub struct FrameSetup {
    pub map: PskMapSpec,
    pub code: ConvCodeSpec,
    pub interleaver: Interleaver,
}

impl FrameSetup {
    /// Gray map, the configured code and an interleaver drawn from the
    /// master seed.
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        Ok(Self {
            map: PskMapSpec::gray(cfg.order)?,
            code: cfg.code()?,
            interleaver: make_interleaver(cfg.interleaver_depth, derive_seed(cfg.seed, u64::MAX))?,
        })
    }

    pub fn info_len(&self) -> usize {
        self.interleaver.depth() / self.code.outputs() - self.code.memory
    }
}

/// A transmitted and received frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub info: Vec<u8>,
    pub received: Vec<Complex64>,
    pub noise: NoiseRealization,
}

/// Builds frame `seed`: information bits from stream 0, noise from stream 1.
/// The same seed gives the same bits and noise uniforms for every design
/// and SNR.
pub fn simulate_frame(
    setup: &FrameSetup,
    channel: &MarkovMiddletonParams,
    differential: bool,
    seed: u64,
) -> Result<Frame> {
    let mut bit_rng = stream_rng(seed, 0);
    let info: Vec<u8> = (0..setup.info_len()).map(|_| bit_rng.random_range(0..2u8)).collect();
    let coded = setup.code.encode(&info);
    let frame = setup.map.map(&setup.interleaver.interleave(&coded))?;
    let sent = if differential {
        differential_encode(&frame)
    } else {
        frame
    };
    let noise = NoiseModel::new(*channel)?.sample(sent.len(), &mut stream_rng(seed, 1));
    let received = apply_channel(&sent, &noise)?;
    Ok(Frame { info, received, noise })
}

/// BER after one decoder pass, accumulated over frames.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub design: Design,
    pub iteration: usize,
    pub frames: usize,
    pub bit_errors: u64,
    pub bits: u64,
    pub low_confidence: bool,
    pub channel: MarkovMiddletonParams,
    pub receiver: MarkovMiddletonParams,
}

impl BerRow {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// Error counts per pass for frames `0..n` of one `(point, SNR, design)`.
/// Frames are decoded in parallel batches and folded in index order; the
/// run stops after the first frame at which the last pass has reached
/// `target_errors`, or at `max_frames`. Frames past the stopping index are
/// discarded, so the result does not depend on the batch size.
#[allow(clippy::too_many_arguments)]
pub fn count_errors(
    setup: &FrameSetup,
    channel: &MarkovMiddletonParams,
    receiver: &MarkovMiddletonParams,
    design: Design,
    iterations: usize,
    target_errors: u64,
    max_frames: usize,
    seed: u64,
) -> Result<(usize, Vec<u64>)> {
    let rx = TurboReceiver::new(
        design,
        *receiver,
        setup.map.clone(),
        &setup.code,
        setup.interleaver.clone(),
    )?;
    let batch = rayon::current_num_threads().max(1);
    let mut errors = vec![0u64; iterations + 1];
    let mut frames = 0;
    while frames < max_frames {
        let end = (frames + batch).min(max_frames);
        let counts = (frames..end)
            .into_par_iter()
            .map(|i| {
                let frame = simulate_frame(setup, channel, design.differential(), derive_seed(seed, i as u64))?;
                let states = (design == Design::GenieCsi).then_some(frame.noise.states.as_slice());
                let out = rx.decode(&frame.received, iterations, states)?;
                Ok((0..=iterations)
                    .map(|it| {
                        out.decisions(it)
                            .iter()
                            .zip(&frame.info)
                            .filter(|(a, b)| a != b)
                            .count() as u64
                    })
                    .collect::<Vec<u64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        for c in counts {
            errors.iter_mut().zip(&c).for_each(|(e, n)| *e += n);
            frames += 1;
            if errors[iterations] >= target_errors {
                return Ok((frames, errors));
            }
        }
    }
    Ok((frames, errors))
}

/// One row per `(grid point, SNR, design, pass)`. Frame `i` uses seed
/// `derive_seed(seed, i)` at every SNR and for every design.
pub fn run_ber_sweep(cfg: &SimConfig) -> Result<Vec<BerRow>> {
    expect(cfg, Experiment::BerSweep)?;
    let setup = FrameSetup::from_config(cfg)?;
    let bits_per_frame = setup.info_len() as u64;
    let mut rows = Vec::new();
    for point in cfg.grid_points() {
        for &snr in &cfg.snr_db {
            let channel = point.channel.with_snr_db(snr);
            let receiver = point.receiver.with_snr_db(snr);
            for &design in &cfg.designs {
                let iterations = match design {
                    Design::GenieCsi => cfg.genie_iterations,
                    _ => cfg.iterations,
                };
                let (frames, errors) = count_errors(
                    &setup,
                    &channel,
                    &receiver,
                    design,
                    iterations,
                    cfg.target_errors,
                    cfg.max_frames,
                    cfg.seed,
                )?;
                rows.extend(errors.iter().enumerate().map(|(iteration, &bit_errors)| BerRow {
                    snr_db: snr,
                    design,
                    iteration,
                    frames,
                    bit_errors,
                    bits: frames as u64 * bits_per_frame,
                    low_confidence: bit_errors < cfg.target_errors,
                    channel,
                    receiver,
                }));
            }
        }
    }
    Ok(rows)
}

/// Noise realization at the first grid point and the single SNR.
pub fn dump_noise(cfg: &SimConfig) -> Result<NoiseRealization> {
    expect(cfg, Experiment::NoiseDump)?;
    let params = cfg.grid_points()[0].channel.with_snr_db(cfg.snr_db[0]);
    sample_noise(&params, cfg.noise_length, cfg.seed)
}

/// `(I, joint, separate)` for every configured iteration count.
pub fn complexity_table(cfg: &SimConfig) -> Result<Vec<(usize, u64, u64)>> {
    expect(cfg, Experiment::Complexity)?;
    let (m, w, l) = (cfg.order as u64, cfg.num_states as u64, cfg.code_memory as u32);
    Ok(cfg
        .complexity_iterations
        .iter()
        .map(|&i| {
            (
                i,
                complexity_count(m, w, l, i as u64, Architecture::Joint),
                complexity_count(m, w, l, i as u64, Architecture::Separate),
            )
        })
        .collect())
}

/// Runs the configured experiment and tabulates it.
pub fn run_experiment(cfg: &SimConfig) -> Result<SweepResult> {
    Ok(match cfg.experiment {
        Experiment::AirSweep => SweepResult::from_air(&run_air_sweep(cfg)?),
        Experiment::BerSweep => SweepResult::from_ber(cfg, &run_ber_sweep(cfg)?),
        Experiment::NoiseDump => SweepResult::from_noise(&dump_noise(cfg)?),
        Experiment::Complexity => SweepResult::from_complexity(cfg, &complexity_table(cfg)?),
    })
}

/// Runs `f` on a dedicated pool of `threads` workers, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
