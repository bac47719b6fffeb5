//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_middleton::MarkovMiddletonParams;
use crate::receivers::Design;
use crate::tx::ConvCodeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    AirSweep,
    BerSweep,
    NoiseDump,
    Complexity,
}

/// Every experiment reads the keys it needs and ignores the rest. Receiver
/// keys (`rx_*`) left unset follow the channel at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// PSK order `M`.
    pub order: usize,
    #[serde(rename = "A")]
    pub impulsive_index: f64,
    #[serde(rename = "Lambda")]
    pub power_ratio: f64,
    pub r: f64,
    #[serde(rename = "W")]
    pub num_states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_w: Option<usize>,

    pub snr_db: Vec<f64>,
    /// Sweeps `Lambda` when non-empty.
    pub lambda_grid: Vec<f64>,
    /// Sweeps `r` when non-empty.
    pub r_grid: Vec<f64>,

    pub seq_length: usize,
    pub n_sequences: usize,

    pub designs: Vec<Design>,
    pub iterations: usize,
    pub genie_iterations: usize,
    pub interleaver_depth: usize,
    pub code_memory: usize,
    /// Octal generator strings.
    pub generators: Vec<String>,
    pub target_errors: u64,
    pub max_frames: usize,

    pub noise_length: usize,

    pub complexity_iterations: Vec<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::AirSweep,
            seed: 1,
            out: None,
            threads: None,
            order: 4,
            impulsive_index: 0.3,
            power_ratio: 10.0,
            r: 0.9,
            num_states: 4,
            rx_a: None,
            rx_lambda: None,
            rx_r: None,
            rx_w: None,
            snr_db: vec![3.0],
            lambda_grid: Vec::new(),
            r_grid: Vec::new(),
            seq_length: 100_000,
            n_sequences: 10,
            designs: vec![Design::Joint, Design::Separate, Design::PskBaseline, Design::GenieCsi],
            iterations: 10,
            genie_iterations: 30,
            interleaver_depth: 100_000,
            code_memory: 2,
            generators: vec!["5".into(), "7".into()],
            target_errors: 100,
            max_frames: 1000,
            noise_length: 1000,
            complexity_iterations: vec![0, 1, 2, 3, 10],
        }
    }
}

/// One point of the channel/receiver parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub channel: MarkovMiddletonParams,
    pub receiver: MarkovMiddletonParams,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg = Self::parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without validating, for callers that apply overrides first.
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg = Self::read(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// [`load`](Self::load) without validation.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_toml(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.order < 2 || !self.order.is_power_of_two() {
            return bad(format!("order {} is not a power of two ≥ 2", self.order));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        for p in self.grid_points() {
            p.channel.validate().map_err(as_config)?;
            p.receiver.validate().map_err(as_config)?;
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("SNR values must be finite".into());
        }
        match self.experiment {
            Experiment::AirSweep => {
                if self.snr_db.is_empty() {
                    return bad("snr_db grid is empty".into());
                }
                if self.seq_length == 0 || self.n_sequences == 0 {
                    return bad("seq_length and n_sequences must be positive".into());
                }
            }
            Experiment::BerSweep => {
                if self.snr_db.is_empty() {
                    return bad("snr_db grid is empty".into());
                }
                if self.designs.is_empty() {
                    return bad("designs list is empty".into());
                }
                if self.max_frames == 0 {
                    return bad("max_frames must be at least 1".into());
                }
                if self.target_errors == 0 {
                    return bad("target_errors must be at least 1".into());
                }
                let code = self.code()?;
                let n = code.outputs();
                let m = self.order.trailing_zeros() as usize;
                if !self.interleaver_depth.is_multiple_of(n)
                    || self.interleaver_depth / n <= code.memory
                    || !self.interleaver_depth.is_multiple_of(m)
                {
                    return bad(format!(
                        "interleaver depth {} must hold a terminated codeword and whole symbols",
                        self.interleaver_depth
                    ));
                }
            }
            Experiment::NoiseDump => {
                if self.noise_length == 0 {
                    return bad("noise_length must be positive".into());
                }
                if self.snr_db.len() != 1 {
                    return bad("noise dump takes exactly one snr_db value".into());
                }
            }
            Experiment::Complexity => {
                if self.complexity_iterations.is_empty() {
                    return bad("complexity_iterations is empty".into());
                }
            }
        }
        Ok(())
    }

    pub fn code(&self) -> Result<ConvCodeSpec> {
        let gens: Vec<&str> = self.generators.iter().map(String::as_str).collect();
        ConvCodeSpec::from_octal(self.code_memory, &gens)
    }

    /// Channel and receiver parameters at every `(r, Lambda)` grid point,
    /// `r` outermost; `σ₀²` is left at 1 and set per SNR.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let rs = if self.r_grid.is_empty() {
            vec![self.r]
        } else {
            self.r_grid.clone()
        };
        let lambdas = if self.lambda_grid.is_empty() {
            vec![self.power_ratio]
        } else {
            self.lambda_grid.clone()
        };
        let mut out = Vec::with_capacity(rs.len() * lambdas.len());
        for &r in &rs {
            for &lambda in &lambdas {
                let channel = MarkovMiddletonParams {
                    num_states: self.num_states,
                    impulsive_index: self.impulsive_index,
                    power_ratio: lambda,
                    correlation: r,
                    background_var: 1.0,
                };
                let receiver = MarkovMiddletonParams {
                    num_states: self.rx_w.unwrap_or(channel.num_states),
                    impulsive_index: self.rx_a.unwrap_or(channel.impulsive_index),
                    power_ratio: self.rx_lambda.unwrap_or(channel.power_ratio),
                    correlation: self.rx_r.unwrap_or(channel.correlation),
                    background_var: 1.0,
                };
                out.push(GridPoint { channel, receiver });
            }
        }
        out
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParams(msg) => Error::InvalidConfig(msg),
        other => other,
    }
}

/// Path of the resolved config written beside `csv`.
pub fn resolved_config_path(csv: &Path) -> PathBuf {
    csv.with_extension("config.toml")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = SimConfig::default();
        let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flat_keys_parse() {
        let cfg = SimConfig::from_toml_str(
            "experiment = \"ber_sweep\"\nA = 0.1\nLambda = 10.0\nr = 0.9\nW = 4\nrx_w = 2\n\
             snr_db = [1.0, 2.0]\ndesigns = [\"joint\", \"psk_baseline\"]\ninterleaver_depth = 800\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::BerSweep);
        assert_eq!(cfg.designs, vec![Design::Joint, Design::PskBaseline]);
        let p = cfg.grid_points()[0];
        assert_eq!(p.receiver.num_states, 2);
        assert_eq!(p.receiver.impulsive_index, 0.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimConfig::from_toml_str("bogus = 1").is_err());
        assert!(SimConfig::from_toml_str("snr_db = []").is_err());
        assert!(SimConfig::from_toml_str("A = -1.0").is_err());
        assert!(SimConfig::from_toml_str("order = 3").is_err());
        assert!(SimConfig::from_toml_str("experiment = \"ber_sweep\"\ninterleaver_depth = 7").is_err());
        assert!(SimConfig::from_toml_str("experiment = \"ber_sweep\"\nmax_frames = 0").is_err());
    }

    #[test]
    fn grid_order() {
        let cfg = SimConfig {
            r_grid: vec![0.0, 0.9],
            lambda_grid: vec![1.0, 10.0, 100.0],
            rx_r: Some(0.0),
            ..SimConfig::default()
        };
        let pts = cfg.grid_points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[4].channel.correlation, 0.9);
        assert_eq!(pts[4].channel.power_ratio, 10.0);
        assert_eq!(pts[4].receiver.correlation, 0.0);
        assert_eq!(pts[4].receiver.power_ratio, 10.0);
    }
}
