//! Chunked, deterministic Monte Carlo driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CpfError, Result};

pub const DEFAULT_CHUNK_SIZE: u64 = 4096;

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_trajectories: u64,
    pub seed: u64,
    pub chunk_size: u64,
    /// Grid step of the discretized OU path reference; `None` picks
    /// `min(tau_c, 1/g) / 50`.
    #[serde(default)]
    pub path_dt: Option<f64>,
}

impl McConfig {
    pub fn new(n_trajectories: u64, seed: u64) -> Self {
        Self {
            n_trajectories,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE.min(n_trajectories.max(1)),
            path_dt: None,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn with_path_dt(mut self, dt: f64) -> Self {
        self.path_dt = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(CpfError::InvalidParameter(
                "n_trajectories must be >= 1".into(),
            ));
        }
        if self.chunk_size == 0 || self.chunk_size > self.n_trajectories {
            return Err(CpfError::InvalidParameter(format!(
                "chunk_size = {} must be in [1, n_trajectories = {}]",
                self.chunk_size, self.n_trajectories
            )));
        }
        if let Some(dt) = self.path_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CpfError::InvalidParameter(format!(
                    "path_dt = {dt} must be > 0"
                )));
            }
        }
        Ok(())
    }

    pub fn n_chunks(&self) -> u64 {
        self.n_trajectories.div_ceil(self.chunk_size)
    }
}

/// Runs `body(index, &mut acc)` for every trajectory index, one accumulator
/// per chunk, in parallel. Accumulators come back in chunk order.
pub fn run_chunks<A, I, F>(cfg: &McConfig, init: I, body: F) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(u64, &mut A) + Sync,
{
    cfg.validate()?;
    let n = cfg.n_trajectories;
    let chunk = cfg.chunk_size;
    Ok((0..cfg.n_chunks())
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let start = c * chunk;
            let end = (start + chunk).min(n);
            for i in start..end {
                body(i, &mut acc);
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(McConfig::new(10, 0).validate().is_ok());
        assert_eq!(McConfig::new(10, 0).chunk_size, 10);
        assert!(McConfig::new(0, 0).validate().is_err());
        assert!(McConfig::new(10, 0).with_chunk_size(11).validate().is_err());
        assert!(McConfig::new(10, 0).with_path_dt(0.0).validate().is_err());
    }

    #[test]
    fn chunks_cover_every_index_once() {
        let cfg = McConfig::new(1000, 0).with_chunk_size(64);
        let parts = run_chunks(&cfg, Vec::new, |i, v: &mut Vec<u64>| v.push(i)).unwrap();
        assert_eq!(parts.len(), 16);
        let all: Vec<u64> = parts.into_iter().flatten().collect();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }
}
