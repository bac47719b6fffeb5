//! `dpsk-in`: AIR, BER, noise and complexity sweeps writing CSV.
//!
//! Each subcommand starts from the defaults, applies `--config` if given,
//! then applies flags. The resolved config is written beside the CSV.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use turbo_dpsk_in::harness::{run_experiment, with_threads, Experiment, SimConfig};
use turbo_dpsk_in::receivers::Design;

#[derive(Debug, Parser)]
#[command(
    name = "dpsk-in",
    version,
    about = "Markov-Middleton channel and turbo-DPSK-IN receiver sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Achievable information rate over an SNR, Lambda or r grid
    Air {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        channel: Channel,
        /// Symbols per sequence
        #[arg(long = "seq-length")]
        seq_length: Option<usize>,
        /// Independent sequences per point
        #[arg(long = "n-sequences")]
        n_sequences: Option<usize>,
    },
    /// Bit error rate per turbo pass
    Ber {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        channel: Channel,
        /// Receivers to run: joint, separate, psk_baseline, genie_csi
        #[arg(long, value_delimiter = ',')]
        designs: Option<Vec<Design>>,
        /// Turbo iterations after the first pass
        #[arg(long)]
        iterations: Option<usize>,
        /// Iterations for the genie receiver
        #[arg(long = "genie-iterations")]
        genie_iterations: Option<usize>,
        /// Interleaver depth in coded bits
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long = "target-errors")]
        target_errors: Option<u64>,
        #[arg(long = "max-frames")]
        max_frames: Option<usize>,
    },
    /// One noise realization: t, state, re(n), im(n)
    Noise {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        channel: Channel,
        /// Number of samples
        #[arg(long)]
        length: Option<usize>,
    },
    /// Multiplications per symbol for the joint and separate receivers
    Complexity {
        #[command(flatten)]
        shared: Shared,
        /// PSK order M
        #[arg(long)]
        order: Option<usize>,
        /// Noise states W
        #[arg(long = "W")]
        w: Option<usize>,
        /// Code memory L
        #[arg(long)]
        memory: Option<usize>,
        /// Iteration counts to tabulate
        #[arg(long, value_delimiter = ',')]
        iterations: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
struct Shared {
    /// Flat TOML config; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct Channel {
    /// PSK order M
    #[arg(long)]
    order: Option<usize>,
    /// Impulsive index
    #[arg(long = "A")]
    a: Option<f64>,
    /// Impulsive-to-background power ratio
    #[arg(long = "Lambda")]
    lambda: Option<f64>,
    /// State correlation
    #[arg(long = "r")]
    r: Option<f64>,
    /// Number of noise states
    #[arg(long = "W")]
    w: Option<usize>,
    #[arg(long = "rx-A")]
    rx_a: Option<f64>,
    #[arg(long = "rx-Lambda")]
    rx_lambda: Option<f64>,
    #[arg(long = "rx-r")]
    rx_r: Option<f64>,
    #[arg(long = "rx-W")]
    rx_w: Option<usize>,
    /// SNR values in dB
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    /// Sweep Lambda over these values
    #[arg(long = "Lambda-grid", value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Sweep r over these values
    #[arg(long = "r-grid", value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Shared {
    fn base(&self, experiment: Experiment) -> turbo_dpsk_in::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::read(path)?,
            None => SimConfig::default(),
        };
        cfg.experiment = experiment;
        set(&mut cfg.seed, self.seed);
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        Ok(cfg)
    }
}

impl Channel {
    fn apply(self, cfg: &mut SimConfig) {
        set(&mut cfg.order, self.order);
        set(&mut cfg.impulsive_index, self.a);
        set(&mut cfg.power_ratio, self.lambda);
        set(&mut cfg.r, self.r);
        set(&mut cfg.num_states, self.w);
        cfg.rx_a = self.rx_a.or(cfg.rx_a);
        cfg.rx_lambda = self.rx_lambda.or(cfg.rx_lambda);
        cfg.rx_r = self.rx_r.or(cfg.rx_r);
        cfg.rx_w = self.rx_w.or(cfg.rx_w);
        set(&mut cfg.snr_db, self.snr);
        set(&mut cfg.lambda_grid, self.lambda_grid);
        set(&mut cfg.r_grid, self.r_grid);
    }
}

fn resolve(command: Command) -> turbo_dpsk_in::Result<SimConfig> {
    let cfg = match command {
        Command::Air {
            shared,
            channel,
            seq_length,
            n_sequences,
        } => {
            let mut cfg = shared.base(Experiment::AirSweep)?;
            channel.apply(&mut cfg);
            set(&mut cfg.seq_length, seq_length);
            set(&mut cfg.n_sequences, n_sequences);
            cfg
        }
        Command::Ber {
            shared,
            channel,
            designs,
            iterations,
            genie_iterations,
            depth,
            target_errors,
            max_frames,
        } => {
            let mut cfg = shared.base(Experiment::BerSweep)?;
            channel.apply(&mut cfg);
            set(&mut cfg.designs, designs);
            set(&mut cfg.iterations, iterations);
            set(&mut cfg.genie_iterations, genie_iterations);
            set(&mut cfg.interleaver_depth, depth);
            set(&mut cfg.target_errors, target_errors);
            set(&mut cfg.max_frames, max_frames);
            cfg
        }
        Command::Noise {
            shared,
            channel,
            length,
        } => {
            let mut cfg = shared.base(Experiment::NoiseDump)?;
            channel.apply(&mut cfg);
            set(&mut cfg.noise_length, length);
            cfg
        }
        Command::Complexity {
            shared,
            order,
            w,
            memory,
            iterations,
        } => {
            let mut cfg = shared.base(Experiment::Complexity)?;
            set(&mut cfg.order, order);
            set(&mut cfg.num_states, w);
            set(&mut cfg.code_memory, memory);
            set(&mut cfg.complexity_iterations, iterations);
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli.command)?;
    let table = with_threads(cfg.threads, || run_experiment(&cfg))??;
    match &cfg.out {
        Some(path) => table.write(path, &cfg)?,
        None => std::io::stdout()
            .write_all(table.to_csv_string()?.as_bytes())
            .context("writing to stdout")?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use turbo_dpsk_in::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. } | Error::Csv { .. }) => 2,
        Some(_) => 1,
        None if err.downcast_ref::<std::io::Error>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // bad flags are a bad configuration
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // crate errors already print their cause
            if e.downcast_ref::<turbo_dpsk_in::Error>().is_some() {
                eprintln!("error: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
