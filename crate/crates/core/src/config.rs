//! All encoder hyperparameters in one place.

use serde::{Deserialize, Serialize};

use crate::dod::{SearchConfig, SearchStrategy, DEFAULT_B, DEFAULT_ETA, DEFAULT_MAX_ROUNDS};
use crate::pq::{lloyd, Bandwidth, DensityWeighting, SeedingMode, TrainingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub m: usize,
    pub dod_target: f64,
    pub eta: usize,
    pub b: f64,
    pub f_ct: f64,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    pub mode: SeedingMode,
    pub weighting: DensityWeighting,
    pub strategy: SearchStrategy,
    pub max_rounds: usize,
    pub max_iterations: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            m: crate::DEFAULT_M,
            dod_target: 1.0,
            eta: DEFAULT_ETA,
            b: DEFAULT_B,
            f_ct: 0.0,
            bandwidth: Bandwidth::Auto,
            seed: crate::DEFAULT_SEED,
            mode: SeedingMode::Dapq,
            weighting: DensityWeighting::Raw,
            strategy: SearchStrategy::Uniform,
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_iterations: lloyd::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl EncoderConfig {
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            mode: self.mode,
            weighting: self.weighting,
            bandwidth: self.bandwidth,
            seed: self.seed,
            max_iterations: self.max_iterations,
        }
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            target: self.dod_target,
            eta: self.eta,
            b: self.b,
            max_rounds: self.max_rounds,
            strategy: self.strategy,
            parallel: true,
        }
    }
}
