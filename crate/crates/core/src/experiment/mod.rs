//! ε sweeps over datasets and release modes, with per-cell seeds, summary
//! statistics, paired significance tests and a reproducible run manifest.
//!
//! A cell is one (dataset, ε, mode, trial). Clean cells carry no ε. Each
//! cell splits its dataset, deals the training side to the data owners, runs
//! the protocol with one classification query holding the test rows, and
//! scores the answer.

mod config;
mod report;

pub use config::{ExperimentConfig, Mode, DEFAULT_GRID};
pub use report::{
    compare_runs, read_summary, wilcoxon_table, write_comparison, Metric, SummaryRow,
    WilcoxonOutcome, WilcoxonRow, ALPHA,
};

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    file_sha256, load_csv_with_schema_file, split, DataError, Dataset, DatasetManifest, SplitPair,
};
use crate::dp::{derive_seed, DpError, PrivacyBudget};
use crate::metrics::{ClassificationReport, MetricsError};
use crate::protocol::{
    run_protocol, DataRelease, ModelRelease, ProtocolError, Query, Scenario, SeededNoise,
    SimulationTrace,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cell produced no answer: {0}")]
    NoAnswer(String),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("cannot compare runs: {0}")]
    Compare(String),
}

pub(crate) fn output_error(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSeeds {
    /// Train/test shuffle; shared by every ε and mode of one trial.
    pub split: u64,
    /// Root of every protocol noise stream in the cell.
    pub noise: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    /// `None` exactly for clean cells.
    pub epsilon: Option<f64>,
    pub mode: Mode,
    pub trial: u32,
}

impl CellKey {
    pub fn seeds(&self, master: u64) -> CellSeeds {
        let trial = self.trial.to_le_bytes();
        let eps = match self.epsilon {
            Some(e) => e.to_bits().to_le_bytes().to_vec(),
            None => b"-".to_vec(),
        };
        CellSeeds {
            split: derive_seed(master, &[b"split", self.dataset.as_bytes(), &trial]),
            noise: derive_seed(
                master,
                &[
                    b"cell",
                    self.dataset.as_bytes(),
                    &eps,
                    self.mode.as_str().as_bytes(),
                    &trial,
                ],
            ),
        }
    }

    fn epsilon_label(&self) -> String {
        self.epsilon.map_or("-".into(), |e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<&ClassificationReport> for Scores {
    fn from(r: &ClassificationReport) -> Self {
        Self {
            accuracy: r.accuracy,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub key: CellKey,
    pub seeds: CellSeeds,
    pub outcome: Result<Scores, String>,
}

/// Protocol scenario of one cell, with the test rows as the single query.
pub fn cell_scenario(
    data: &Dataset,
    cfg: &ExperimentConfig,
    key: &CellKey,
) -> Result<(Scenario, SplitPair), ExperimentError> {
    let seeds = key.seeds(cfg.seed);
    let pair = split(data, cfg.split, seeds.split)?;
    let owners = pair.train.partition(cfg.owners.min(pair.train.len()), cfg.bounds)?;
    let budget = match key.epsilon {
        Some(e) => Some(PrivacyBudget::new(e)?),
        None => None,
    };
    let need = |on: bool| -> Result<Option<PrivacyBudget>, ExperimentError> {
        match (on, budget) {
            (false, _) => Ok(None),
            (true, Some(b)) => Ok(Some(b)),
            (true, None) => Err(ExperimentError::Config(format!(
                "mode {} needs an epsilon",
                key.mode
            ))),
        }
    };
    let data_release = match need(key.mode.perturbs_data())? {
        Some(budget) => DataRelease::Perturb {
            budget,
            layout: cfg.noise_layout,
        },
        None => DataRelease::Unperturbed,
    };
    let model_release = match need(key.mode.perturbs_model())? {
        Some(budget) => ModelRelease::Perturb {
            budget,
            count_noise_scale: cfg.count_noise_scale,
        },
        None => ModelRelease::Unperturbed,
    };
    let scenario = Scenario::standard(
        owners,
        pair.train.clone(),
        data_release,
        model_release,
        vec![Query::Classify {
            user: 0,
            rows: pair.test.records().to_vec(),
        }],
    );
    Ok((scenario, pair))
}

/// Runs one cell's protocol. Pure function of its arguments.
pub fn cell_trace(
    data: &Dataset,
    cfg: &ExperimentConfig,
    key: &CellKey,
) -> Result<(SimulationTrace, SplitPair), ExperimentError> {
    let (scenario, pair) = cell_scenario(data, cfg, key)?;
    let trace = run_protocol(&scenario, &mut SeededNoise(key.seeds(cfg.seed).noise))?;
    Ok((trace, pair))
}

/// Runs and scores one cell.
pub fn run_cell(
    data: &Dataset,
    cfg: &ExperimentConfig,
    key: &CellKey,
) -> Result<ClassificationReport, ExperimentError> {
    let (trace, pair) = cell_trace(data, cfg, key)?;
    let labels = trace.response(0).ok_or_else(|| {
        ExperimentError::NoAnswer(
            trace
                .faults
                .first()
                .map_or("no classification response".into(), |f| f.message.clone()),
        )
    })?;
    Ok(ClassificationReport::from_labels(labels, pair.test.labels())?)
}

/// Every cell of `cfg` for one dataset, in canonical order.
pub fn cells_for(cfg: &ExperimentConfig, dataset: &str) -> Vec<CellKey> {
    let mut modes = cfg.modes.clone();
    modes.sort();
    modes.dedup();
    let mut out = Vec::new();
    for mode in modes {
        let grid: Vec<Option<f64>> = if mode.uses_epsilon() {
            cfg.epsilon_grid.iter().map(|e| Some(e.epsilon())).collect()
        } else {
            vec![None]
        };
        for epsilon in grid {
            for trial in 0..cfg.trials {
                out.push(CellKey {
                    dataset: dataset.to_string(),
                    epsilon,
                    mode,
                    trial,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub path: PathBuf,
    pub data: Dataset,
    pub manifest: DatasetManifest,
}

pub fn load_dataset(path: &Path) -> Result<LoadedDataset, ExperimentError> {
    let (data, schema) = load_csv_with_schema_file(path)?;
    let sha = file_sha256(path)?;
    let manifest = DatasetManifest::describe(&data, &schema, Some(sha));
    Ok(LoadedDataset {
        path: path.to_path_buf(),
        data,
        manifest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub key: CellKey,
    pub seeds: CellSeeds,
    /// `None` on success.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub datasets: Vec<DatasetManifest>,
    pub cells: Vec<CellEntry>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, ExperimentError> {
        let bad = |e: &dyn std::fmt::Display| ExperimentError::Config(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| bad(&e))?;
        serde_json::from_str(&text).map_err(|e| bad(&e))
    }

    /// Re-runs one recorded cell, checking the recorded seeds and the source
    /// checksum first.
    pub fn reproduce(&self, key: &CellKey) -> Result<ClassificationReport, ExperimentError> {
        let entry = self
            .cells
            .iter()
            .find(|c| &c.key == key)
            .ok_or_else(|| ExperimentError::Config(format!("cell {key:?} not in manifest")))?;
        if entry.seeds != key.seeds(self.config.seed) {
            return Err(ExperimentError::Config("recorded seeds do not match derivation".into()));
        }
        let path = self
            .config
            .datasets
            .iter()
            .find(|p| dataset_name(p) == key.dataset)
            .ok_or_else(|| ExperimentError::Config(format!("unknown dataset {}", key.dataset)))?;
        let loaded = load_dataset(path)?;
        let recorded = self.datasets.iter().find(|d| d.name == key.dataset);
        if recorded.and_then(|d| d.source_sha256.as_ref()) != loaded.manifest.source_sha256.as_ref() {
            return Err(ExperimentError::Config(format!(
                "{} changed since the run",
                path.display()
            )));
        }
        run_cell(&loaded.data, &self.config, key)
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<CellRow>,
    pub summary: Vec<SummaryRow>,
    pub wilcoxon: Vec<WilcoxonRow>,
    pub manifest: RunManifest,
}

impl RunOutput {
    pub fn failures(&self) -> impl Iterator<Item = &CellRow> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }

    /// Writes `results.csv`, `summary.csv`, `wilcoxon.csv` and
    /// `manifest.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        report::write_results(&dir.join("results.csv"), &self.rows)?;
        report::write_summary(&dir.join("summary.csv"), &self.summary)?;
        report::write_wilcoxon(&dir.join("wilcoxon.csv"), &self.wilcoxon)?;
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest).map_err(|e| output_error(&path, e))?;
        std::fs::write(&path, json + "\n").map_err(|e| output_error(&path, e))
    }
}

/// Runs every cell of `cfg` in parallel. Cell failures are recorded in the
/// rows and manifest; only configuration and loading problems are errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());

    let loaded: Vec<LoadedDataset> = cfg
        .datasets
        .iter()
        .map(|p| load_dataset(p))
        .collect::<Result<_, _>>()?;
    let mut names: Vec<&str> = loaded.iter().map(|l| l.data.name()).collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(ExperimentError::Config("two datasets share a name".into()));
    }

    let jobs: Vec<(&Dataset, CellKey)> = loaded
        .iter()
        .flat_map(|l| cells_for(cfg, l.data.name()).into_iter().map(move |k| (&l.data, k)))
        .collect();
    let mut rows: Vec<CellRow> = jobs
        .par_iter()
        .map(|(data, key)| CellRow {
            seeds: key.seeds(cfg.seed),
            outcome: run_cell(data, cfg, key)
                .map(|r| Scores::from(&r))
                .map_err(|e| e.to_string()),
            key: key.clone(),
        })
        .collect();
    rows.sort_by(|a, b| report::row_order(&a.key, &b.key));

    let summary = report::summarize(&rows);
    let wilcoxon = wilcoxon_table(&summary, &summary, &report::against_clean(&summary))?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        datasets: loaded.into_iter().map(|l| l.manifest).collect(),
        cells: rows
            .iter()
            .map(|r| CellEntry {
                key: r.key.clone(),
                seeds: r.seeds,
                error: r.outcome.as_ref().err().cloned(),
            })
            .collect(),
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        rows,
        summary,
        wilcoxon,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClassId;

    fn toy() -> Dataset {
        Dataset::from_records(
            "toy",
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            (0..40)
                .map(|i| {
                    let c = (i % 2) as f64;
                    vec![c * 5.0 + (i % 7) as f64 * 0.1, c * 3.0 - (i % 5) as f64 * 0.2]
                })
                .collect(),
            (0..40).map(|i| ClassId(i % 2)).collect(),
        )
        .unwrap()
    }

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(vec!["toy.csv".into()]);
        c.trials = 2;
        c.owners = 4;
        c
    }

    #[test]
    fn seeds_depend_on_every_key_field() {
        let base = CellKey {
            dataset: "toy".into(),
            epsilon: Some(1.0),
            mode: Mode::DpBoth,
            trial: 0,
        };
        let s = base.seeds(42);
        let vary = [
            CellKey { dataset: "other".into(), ..base.clone() },
            CellKey { epsilon: Some(2.0), ..base.clone() },
            CellKey { mode: Mode::DpData, ..base.clone() },
            CellKey { trial: 1, ..base.clone() },
        ];
        for k in &vary {
            assert_ne!(k.seeds(42).noise, s.noise, "{k:?}");
        }
        assert_ne!(base.seeds(43).noise, s.noise);
        // The split depends only on dataset and trial.
        assert_eq!(vary[1].seeds(42).split, s.split);
        assert_eq!(vary[2].seeds(42).split, s.split);
        assert_ne!(vary[3].seeds(42).split, s.split);
    }

    #[test]
    fn cell_grid_has_one_clean_column() {
        let keys = cells_for(&cfg(), "toy");
        assert_eq!(keys.len(), 2 + 3 * 7 * 2);
        assert!(keys.iter().filter(|k| k.mode == Mode::Clean).all(|k| k.epsilon.is_none()));
    }

    #[test]
    fn cells_are_deterministic_and_clean_ignores_noise() {
        let c = cfg();
        for key in cells_for(&c, "toy").iter().step_by(5) {
            let a = run_cell(&toy(), &c, key).unwrap();
            let b = run_cell(&toy(), &c, key).unwrap();
            assert_eq!(a, b);
        }
        let clean = CellKey {
            dataset: "toy".into(),
            epsilon: None,
            mode: Mode::Clean,
            trial: 0,
        };
        assert_eq!(run_cell(&toy(), &c, &clean).unwrap().accuracy, 1.0);
    }

    #[test]
    fn perturbing_mode_without_epsilon_fails() {
        let key = CellKey {
            dataset: "toy".into(),
            epsilon: None,
            mode: Mode::DpModel,
            trial: 0,
        };
        assert!(matches!(run_cell(&toy(), &cfg(), &key), Err(ExperimentError::Config(_))));
    }
}
