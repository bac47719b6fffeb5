//! Self-describing CSV tables.

use std::path::Path;

use crate::air::AirEstimate;
use crate::error::{Error, Result};
use crate::markov_middleton::{MarkovMiddletonParams, NoiseRealization};

use super::config::{resolved_config_path, SimConfig};
use super::sweep::BerRow;

/// Header plus string rows. Floats use Rust's shortest round-trip
/// formatting, so equal values always print identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepResult {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn params_cells(p: &MarkovMiddletonParams) -> [String; 4] {
    [
        p.impulsive_index.to_string(),
        p.power_ratio.to_string(),
        p.correlation.to_string(),
        p.num_states.to_string(),
    ]
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl SweepResult {
    pub fn from_air(points: &[AirEstimate]) -> Self {
        let header = header(&[
            "A",
            "Lambda",
            "r",
            "W",
            "snr_db",
            "rx_A",
            "rx_Lambda",
            "rx_r",
            "rx_W",
            "air_bits",
            "std_err",
            "T",
            "n_seq",
            "seed",
        ]);
        let rows = points
            .iter()
            .map(|p| {
                let mut row: Vec<String> = params_cells(&p.channel_params).into();
                row.push(p.snr_db.to_string());
                row.extend(params_cells(&p.receiver_params));
                row.extend([
                    p.air.to_string(),
                    p.std_error.to_string(),
                    p.seq_length.to_string(),
                    p.n_sequences.to_string(),
                    p.seed.to_string(),
                ]);
                row
            })
            .collect();
        Self { header, rows }
    }

    pub fn from_ber(cfg: &SimConfig, rows: &[BerRow]) -> Self {
        let header = header(&[
            "A",
            "Lambda",
            "r",
            "W",
            "snr_db",
            "rx_A",
            "rx_Lambda",
            "rx_r",
            "rx_W",
            "M",
            "interleaver_depth",
            "design",
            "iteration",
            "ber",
            "frames",
            "bit_errors",
            "bits",
            "low_confidence",
            "target_errors",
            "max_frames",
            "seed",
        ]);
        let rows = rows
            .iter()
            .map(|b| {
                let mut row: Vec<String> = params_cells(&b.channel).into();
                row.push(b.snr_db.to_string());
                row.extend(params_cells(&b.receiver));
                row.extend([
                    cfg.order.to_string(),
                    cfg.interleaver_depth.to_string(),
                    b.design.to_string(),
                    b.iteration.to_string(),
                    b.ber().to_string(),
                    b.frames.to_string(),
                    b.bit_errors.to_string(),
                    b.bits.to_string(),
                    b.low_confidence.to_string(),
                    cfg.target_errors.to_string(),
                    cfg.max_frames.to_string(),
                    cfg.seed.to_string(),
                ]);
                row
            })
            .collect();
        Self { header, rows }
    }

    pub fn from_noise(noise: &NoiseRealization) -> Self {
        let rows = noise
            .states
            .iter()
            .zip(&noise.samples)
            .enumerate()
            .map(|(t, (s, n))| vec![t.to_string(), s.to_string(), n.re.to_string(), n.im.to_string()])
            .collect();
        Self {
            header: header(&["t", "state", "re(n)", "im(n)"]),
            rows,
        }
    }

    pub fn from_complexity(cfg: &SimConfig, table: &[(usize, u64, u64)]) -> Self {
        let rows = table
            .iter()
            .map(|(i, joint, sep)| {
                vec![
                    cfg.order.to_string(),
                    cfg.num_states.to_string(),
                    cfg.code_memory.to_string(),
                    i.to_string(),
                    joint.to_string(),
                    sep.to_string(),
                ]
            })
            .collect();
        Self {
            header: header(&["M", "W", "L", "I", "joint", "separate"]),
            rows,
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |source| Error::Csv {
            path: "<memory>".into(),
            source,
        };
        w.write_record(&self.header).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv {
            path: "<memory>".into(),
            source: e.into_error().into(),
        })?;
        Ok(String::from_utf8(bytes).expect("fields are UTF-8"))
    }

    /// Writes the table to `path` and the resolved config beside it.
    pub fn write(&self, path: &Path, cfg: &SimConfig) -> Result<()> {
        let io = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::write(path, self.to_csv_string()?).map_err(io)?;
        let cfg_path = resolved_config_path(path);
        std::fs::write(&cfg_path, cfg.to_toml_string()).map_err(|source| Error::Io {
            path: cfg_path.display().to_string(),
            source,
        })
    }
}
