//! Every tunable of the codec in one serializable record.
//!
//! Files are TOML with flat keys; missing keys take their defaults.

use serde::{Deserialize, Serialize};

use crate::codebook::{LloydParams, LADDER};
use crate::entropy::{INCREMENT, RESCALE_THRESHOLD};
use crate::error::{Error, Result};
use crate::restoration::{LossPattern, PredictorParams, DEFAULT_CONTEXT, DEFAULT_LEVELS};
use crate::transform::DEFAULT_DIM;

/// Twice the top of the ladder, so every ladder size is a strict reduction.
pub const DEFAULT_ROOT_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Latent dimension n_z.
    pub n_z: usize,
    /// Size of the root codebook the ladder is clustered from.
    pub root_size: usize,
    /// Codebook sizes for the variable-rate ladder, largest first.
    pub ladder: Vec<usize>,
    pub lloyd_max_iters: usize,
    pub lloyd_rel_tol: f64,
    /// Range-coder model increment. Fixed by the stream format; recorded for reproducibility.
    pub coder_increment: u32,
    /// Range-coder rescale threshold. Fixed by the stream format.
    pub coder_rescale_threshold: u32,
    pub context_size: usize,
    pub backoff_levels: Vec<usize>,
    /// Length of lost raster runs; 0 selects independent uniform losses.
    pub loss_burst: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_z: DEFAULT_DIM,
            root_size: DEFAULT_ROOT_SIZE,
            ladder: LADDER.to_vec(),
            lloyd_max_iters: LloydParams::default().max_iters,
            lloyd_rel_tol: LloydParams::default().rel_tol,
            coder_increment: INCREMENT,
            coder_rescale_threshold: RESCALE_THRESHOLD,
            context_size: DEFAULT_CONTEXT,
            backoff_levels: DEFAULT_LEVELS.to_vec(),
            loss_burst: 0,
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_owned()));
        if self.n_z == 0 || self.n_z > crate::transform::PATCH_DIM {
            return fail("n_z must lie in 1..=768");
        }
        if self.root_size < 2 || self.root_size > usize::from(u16::MAX) {
            return fail("root_size must lie in 2..=65535");
        }
        if self.ladder.windows(2).any(|w| w[0] <= w[1]) || self.ladder.contains(&0) {
            return fail("ladder must be strictly decreasing positive sizes");
        }
        if self.coder_increment != INCREMENT || self.coder_rescale_threshold != RESCALE_THRESHOLD {
            return fail("coder constants are fixed by stream version 1 (increment 32, rescale 65536)");
        }
        if self.lloyd_max_iters == 0 || self.lloyd_rel_tol.is_nan() || self.lloyd_rel_tol < 0.0 {
            return fail("Lloyd parameters must be positive");
        }
        self.predictor().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn lloyd(&self) -> LloydParams {
        LloydParams {
            max_iters: self.lloyd_max_iters,
            rel_tol: self.lloyd_rel_tol,
        }
    }

    pub fn predictor(&self) -> PredictorParams {
        PredictorParams {
            context_size: self.context_size,
            levels: self.backoff_levels.clone(),
        }
    }

    pub fn loss_pattern(&self) -> LossPattern {
        match self.loss_burst {
            0 => LossPattern::Uniform,
            run => LossPattern::Burst { run },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = Config::from_toml("n_z = 32\nseed = 9\n").unwrap();
        assert_eq!(cfg.n_z, 32);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ladder, LADDER.to_vec());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_toml("n_z = 0").is_err());
        assert!(Config::from_toml("root_size = 1").is_err());
        assert!(Config::from_toml("ladder = [8, 16]").is_err());
        assert!(Config::from_toml("coder_increment = 24").is_err());
        assert!(Config::from_toml("unknown_key = 1").is_err());
        assert!(Config::from_toml("backoff_levels = [12, 8]").is_err());
    }
}
