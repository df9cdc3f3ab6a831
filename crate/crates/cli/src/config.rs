//! JSON experiment configuration.
//!
//! Times are in arbitrary units `T`; every rate (`gamma_w`, `g`, `gamma`,
//! `omega`, couplings) is in `1/T`, `tau_c` in `T`.

use std::fs;
use std::path::Path;

use cpf_core::{McConfig, Outcome};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Complex amplitude written as `[re, im]`.
pub type Amplitude = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    White {
        gamma_w: f64,
    },
    ExpCorrGauss {
        g: f64,
        tau_c: f64,
    },
    StaticGauss {
        g: f64,
    },
    StaticLorentz {
        gamma: f64,
        #[serde(default)]
        omega: f64,
    },
    SpinBath {
        couplings: Vec<f64>,
        alphas: Vec<Amplitude>,
        betas: Vec<Amplitude>,
    },
    ScaledGaussianBath {
        n_spins: usize,
        g: f64,
        #[serde(default)]
        omega: f64,
    },
    RandomSpinBath {
        n_spins: usize,
        #[serde(default = "one")]
        coupling_scale: f64,
        seed: u64,
    },
    LorentzCoupling {
        gamma: f64,
        #[serde(default)]
        omega: f64,
        n_spins: usize,
        #[serde(default)]
        alpha: Option<Amplitude>,
        #[serde(default)]
        beta: Option<Amplitude>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Coherence,
    ConditionalCoherence,
    Cpf,
    CpfSurface,
    Moments,
    Rate,
    ProbabilityTable,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Coherence => "coherence",
            Quantity::ConditionalCoherence => "conditional_coherence",
            Quantity::Cpf => "cpf",
            Quantity::CpfSurface => "cpf_surface",
            Quantity::Moments => "moments",
            Quantity::Rate => "rate",
            Quantity::ProbabilityTable => "probability_table",
        }
    }

    /// Depends on `t` only.
    pub fn single_time(self) -> bool {
        matches!(self, Quantity::Coherence | Quantity::Rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Montecarlo,
    Sampling,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Montecarlo => "montecarlo",
            Method::Sampling => "sampling",
            Method::Oracle => "oracle",
        }
    }

    pub fn stochastic(self) -> bool {
        matches!(self, Method::Montecarlo | Method::Sampling)
    }
}

/// `count` equally spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }

    fn validate(&self, field: &str) -> Result<(), CliError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(CliError::config(field, "start/stop must be finite"));
        }
        if self.start < 0.0 {
            return Err(CliError::config(field, "times must be non-negative"));
        }
        if self.count == 0 {
            return Err(CliError::config(field, "count must be >= 1"));
        }
        if self.count > 1 && self.stop <= self.start {
            return Err(CliError::config(field, "stop must exceed start"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_trajectories: u64,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `min(4096, n_trajectories)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_dt: Option<f64>,
}

impl McSpec {
    pub fn to_core(self) -> McConfig {
        let mut cfg = McConfig::new(self.n_trajectories, self.seed);
        if let Some(c) = self.chunk_size {
            cfg = cfg.with_chunk_size(c);
        }
        if let Some(dt) = self.path_dt {
            cfg = cfg.with_path_dt(dt);
        }
        cfg
    }
}

/// Qubit amplitudes on `|+>` and `|->`; only the oracle accepts anything
/// other than `|+>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub a: Amplitude,
    pub b: Amplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub quantity: Quantity,
    pub t_grid: GridSpec,
    /// Required for two-time quantities except `cpf`, which evaluates the
    /// diagonal `t = tau` when absent and zips `t_grid` with `tau_grid`
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yx: Option<Outcome>,
    #[serde(default = "plus")]
    pub y_select: Outcome,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_init: Option<InitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

fn plus() -> Outcome {
    Outcome::Plus
}

impl ExperimentConfig {
    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        // A run manifest wraps the config it was produced from.
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("manifest_version") => map
                .remove("config")
                .ok_or_else(|| CliError::config("config", "manifest has no config"))?,
            v => v,
        };
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(&path, e.into_inner().to_string())
        })
    }

    /// Parses config text; a run manifest is accepted in place of a config.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config("<root>", e.to_string()))?;
        if value.get("manifest_version").is_some() {
            return Self::from_value(value);
        }
        // Straight from the text so diagnostics keep line and column.
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(&path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `--seed` and fills in the default chunk size, so the echoed
    /// config fully pins the random streams.
    pub fn resolve(&mut self, seed_override: Option<u64>) {
        if let Some(mc) = self.mc.as_mut() {
            if let Some(seed) = seed_override {
                mc.seed = seed;
            }
            mc.chunk_size.get_or_insert(
                cpf_core::montecarlo::DEFAULT_CHUNK_SIZE.min(mc.n_trajectories.max(1)),
            );
        }
    }

    pub fn output_file(&self) -> String {
        self.output_path
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.quantity.name()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.t_grid.validate("t_grid")?;
        if let Some(g) = &self.tau_grid {
            g.validate("tau_grid")?;
        }
        let q = self.quantity;
        if !q.single_time() && q != Quantity::Cpf && self.tau_grid.is_none() {
            return Err(CliError::config(
                "tau_grid",
                format!("required for quantity {}", q.name()),
            ));
        }
        if q == Quantity::Cpf {
            if let Some(g) = &self.tau_grid {
                if g.count != self.t_grid.count {
                    return Err(CliError::config(
                        "tau_grid",
                        "cpf pairs t_grid with tau_grid; counts must match",
                    ));
                }
            }
        }
        if q == Quantity::ConditionalCoherence && self.yx.is_none() {
            return Err(CliError::config("yx", "required for conditional_coherence"));
        }
        if self.method.stochastic() {
            let mc = self
                .mc
                .ok_or_else(|| CliError::config("mc", "required for stochastic methods"))?;
            mc.to_core()
                .validate()
                .map_err(|e| CliError::config("mc", e.to_string()))?;
        }
        if let Some(init) = &self.system_init {
            let is_plus = init.a == [1.0, 0.0] && init.b == [0.0, 0.0];
            if !is_plus && self.method != Method::Oracle {
                return Err(CliError::config(
                    "system_init",
                    "only the oracle accepts a non-|+> initial state",
                ));
            }
        }
        Ok(())
    }
}

pub fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(&path.display().to_string(), e.to_string()))
}
