//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! datasets = data/iris.csv, data/heart_disease.csv
//! epsilon_grid = 0.01, 0.05, 0.1, 0.5, 1.0, 1.5, 2.0
//! modes = clean, dp_both
//! trials = 30
//! split = 0.9
//! seed = 42
//! out = runs/iris
//! owners = 20
//! noise_per_row = false
//! count_noise_scale = 1
//! bounds = global
//! ```
//!
//! Every key is optional except `datasets`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{BoundsPolicy, NoiseLayout};
use crate::dp::PrivacyBudget;

use super::ExperimentError;

pub const DEFAULT_GRID: [f64; 7] = [0.01, 0.05, 0.1, 0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Neither data nor model perturbed.
    Clean,
    DpData,
    DpModel,
    DpBoth,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Clean, Mode::DpData, Mode::DpModel, Mode::DpBoth];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Clean => "clean",
            Mode::DpData => "dp_data",
            Mode::DpModel => "dp_model",
            Mode::DpBoth => "dp_both",
        }
    }

    pub fn perturbs_data(self) -> bool {
        matches!(self, Mode::DpData | Mode::DpBoth)
    }

    pub fn perturbs_model(self) -> bool {
        matches!(self, Mode::DpModel | Mode::DpBoth)
    }

    /// Whether cells of this mode depend on ε.
    pub fn uses_epsilon(self) -> bool {
        self != Mode::Clean
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<PathBuf>,
    pub epsilon_grid: Vec<PrivacyBudget>,
    pub modes: Vec<Mode>,
    pub trials: u32,
    pub split: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub owners: usize,
    pub noise_layout: NoiseLayout,
    pub count_noise_scale: f64,
    pub bounds: BoundsPolicy,
}

impl ExperimentConfig {
    /// Defaults for everything except the dataset list.
    pub fn new(datasets: Vec<PathBuf>) -> Self {
        Self {
            datasets,
            epsilon_grid: DEFAULT_GRID
                .iter()
                .map(|&e| PrivacyBudget::new(e).expect("grid is positive"))
                .collect(),
            modes: Mode::ALL.to_vec(),
            trials: 30,
            split: 0.9,
            seed: 42,
            out: PathBuf::from("runs/latest"),
            owners: 20,
            noise_layout: NoiseLayout::PerCell,
            count_noise_scale: 1.0,
            bounds: BoundsPolicy::Global,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::new(Vec::new());
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ExperimentError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| ExperimentError::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ExperimentError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Sets one key from its text form. Used by the file parser and by
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let list = |v: &str| -> Vec<String> {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        };
        let num = |v: &str| -> Result<f64, String> {
            v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"))
        };
        match key {
            "datasets" | "dataset" => self.datasets = list(value).into_iter().map(PathBuf::from).collect(),
            "epsilon_grid" => {
                self.epsilon_grid = list(value)
                    .iter()
                    .map(|v| num(v).and_then(|e| PrivacyBudget::new(e).map_err(|e| e.to_string())))
                    .collect::<Result<_, _>>()?
            }
            "modes" | "mode" => {
                self.modes = list(value)
                    .iter()
                    .map(|m| m.parse::<Mode>().map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?
            }
            "trials" => self.trials = value.parse().map_err(|_| format!("bad trials `{value}`"))?,
            "split" => self.split = num(value)?,
            "seed" => self.seed = value.parse().map_err(|_| format!("bad seed `{value}`"))?,
            "out" => self.out = PathBuf::from(value),
            "owners" => self.owners = value.parse().map_err(|_| format!("bad owners `{value}`"))?,
            "noise_per_row" => {
                self.noise_layout = match value {
                    "true" | "yes" | "1" => NoiseLayout::PerRow,
                    "false" | "no" | "0" => NoiseLayout::PerCell,
                    _ => return Err(format!("bad boolean `{value}`")),
                }
            }
            "count_noise_scale" => self.count_noise_scale = num(value)?,
            "bounds" => {
                self.bounds = match value {
                    "global" => BoundsPolicy::Global,
                    "per-owner" | "per_owner" => BoundsPolicy::PerOwner,
                    _ => return Err(format!("bounds must be `global` or `per-owner`, got `{value}`")),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.datasets.is_empty() {
            return fail("no datasets configured");
        }
        if self.modes.is_empty() {
            return fail("no modes configured");
        }
        if self.modes.iter().any(|m| m.uses_epsilon()) && self.epsilon_grid.is_empty() {
            return fail("epsilon grid is empty");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return fail("split must lie in (0, 1)");
        }
        if self.owners == 0 {
            return fail("owners must be at least 1");
        }
        if !(self.count_noise_scale.is_finite() && self.count_noise_scale >= 0.0) {
            return fail("count_noise_scale must be finite and non-negative");
        }
        Ok(())
    }
}
