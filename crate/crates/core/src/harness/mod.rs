//! Experiment configuration, seeded sweeps, CSV output and the complexity
//! calculator.

pub mod complexity;
pub mod config;
pub mod output;
pub mod sweep;

pub use complexity::{complexity_count, Architecture};
pub use config::{resolved_config_path, Experiment, GridPoint, SimConfig};
pub use output::SweepResult;
pub use sweep::{
    complexity_table, count_errors, dump_noise, run_air_sweep, run_ber_sweep, run_experiment, simulate_frame,
    with_threads, BerRow, Frame, FrameSetup,
};
