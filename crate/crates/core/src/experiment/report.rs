//! Result tables: raw rows, per-(dataset, ε, mode) summaries and paired
//! Wilcoxon comparisons over per-ε means.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::Path;

use crate::metrics::{wilcoxon_signed_rank, MetricsError, Verdict, WilcoxonMethod};

use super::{output_error, CellKey, CellRow, ExperimentError, Mode, Scores};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::Precision, Metric::Recall, Metric::F1];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }

    pub fn of(self, s: &Scores) -> f64 {
        match self {
            Metric::Accuracy => s.accuracy,
            Metric::Precision => s.precision,
            Metric::Recall => s.recall,
            Metric::F1 => s.f1,
        }
    }
}

fn eps_cmp(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

pub(crate) fn row_order(a: &CellKey, b: &CellKey) -> Ordering {
    a.dataset
        .cmp(&b.dataset)
        .then(a.mode.cmp(&b.mode))
        .then(eps_cmp(a.epsilon, b.epsilon))
        .then(a.trial.cmp(&b.trial))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub epsilon: Option<f64>,
    pub mode: Mode,
    /// Successful trials.
    pub trials: usize,
    pub failed: usize,
    pub mean: Scores,
    /// Sample standard deviation; zero below two trials.
    pub std: Scores,
}

impl SummaryRow {
    pub fn mean_of(&self, m: Metric) -> f64 {
        m.of(&self.mean)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Groups sorted rows by (dataset, mode, ε).
pub(crate) fn summarize(rows: &[CellRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let k = &rows[start].key;
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| {
                    r.key.dataset == k.dataset && r.key.mode == k.mode && r.key.epsilon == k.epsilon
                })
                .count();
        let ok: Vec<Scores> = rows[start..end]
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().copied())
            .collect();
        let stat = |m: Metric| mean_std(&ok.iter().map(|s| m.of(s)).collect::<Vec<_>>());
        let [a, p, r, f] = Metric::ALL.map(stat);
        out.push(SummaryRow {
            dataset: k.dataset.clone(),
            epsilon: k.epsilon,
            mode: k.mode,
            trials: ok.len(),
            failed: end - start - ok.len(),
            mean: Scores {
                accuracy: a.0,
                precision: p.0,
                recall: r.0,
                f1: f.0,
            },
            std: Scores {
                accuracy: a.1,
                precision: p.1,
                recall: r.1,
                f1: f.1,
            },
        });
        start = end;
    }
    out
}

fn eps_text(e: Option<f64>) -> String {
    e.map_or("-".into(), |e| e.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ExperimentError> {
    csv::Writer::from_path(path).map_err(|e| output_error(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<(), ExperimentError> {
    w.flush().map_err(|e| output_error(path, e))
}

pub(crate) fn write_results(path: &Path, rows: &[CellRow]) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    let put = |w: &mut csv::Writer<_>, rec: Vec<String>| {
        w.write_record(&rec).map_err(|e| output_error(path, e))
    };
    put(
        &mut w,
        [
            "dataset", "epsilon", "mode", "trial", "split_seed", "noise_seed", "accuracy",
            "precision", "recall", "f1", "error",
        ]
        .map(String::from)
        .to_vec(),
    )?;
    for r in rows {
        let mut rec = vec![
            r.key.dataset.clone(),
            r.key.epsilon_label(),
            r.key.mode.to_string(),
            r.key.trial.to_string(),
            r.seeds.split.to_string(),
            r.seeds.noise.to_string(),
        ];
        match &r.outcome {
            Ok(s) => {
                rec.extend(Metric::ALL.map(|m| m.of(s).to_string()));
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), 4));
                rec.push(e.clone());
            }
        }
        put(&mut w, rec)?;
    }
    finish(path, w)
}

const SUMMARY_HEADER: [&str; 13] = [
    "dataset",
    "epsilon",
    "mode",
    "trials",
    "failed",
    "accuracy_mean",
    "accuracy_std",
    "precision_mean",
    "precision_std",
    "recall_mean",
    "recall_std",
    "f1_mean",
    "f1_std",
];

pub(crate) fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(|e| output_error(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.dataset.clone(),
            eps_text(r.epsilon),
            r.mode.to_string(),
            r.trials.to_string(),
            r.failed.to_string(),
        ];
        for m in Metric::ALL {
            rec.push(m.of(&r.mean).to_string());
            rec.push(m.of(&r.std).to_string());
        }
        w.write_record(&rec).map_err(|e| output_error(path, e))?;
    }
    finish(path, w)
}

fn unreadable(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Compare(format!("{}: {e}", path.display()))
}

/// Reads the `summary.csv` of a run directory.
pub fn read_summary(dir: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let path = dir.join("summary.csv");
    let mut r = csv::Reader::from_path(&path).map_err(|e| unreadable(&path, e))?;
    let header = r.headers().map_err(|e| unreadable(&path, e))?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(unreadable(&path, "unexpected summary header"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| unreadable(&path, e))?;
        let bad = |what: &str| unreadable(&path, format!("row {}: bad {what}", i + 1));
        let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(SUMMARY_HEADER[j]));
        let scores = |off: usize| -> Result<Scores, ExperimentError> {
            Ok(Scores {
                accuracy: num(5 + off)?,
                precision: num(7 + off)?,
                recall: num(9 + off)?,
                f1: num(11 + off)?,
            })
        };
        out.push(SummaryRow {
            dataset: rec[0].to_string(),
            epsilon: match &rec[1] {
                "-" => None,
                s => Some(s.parse().map_err(|_| bad("epsilon"))?),
            },
            mode: rec[2].parse().map_err(|_| bad("mode"))?,
            trials: rec[3].parse().map_err(|_| bad("trials"))?,
            failed: rec[4].parse().map_err(|_| bad("failed"))?,
            mean: scores(0)?,
            std: scores(1)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonRow {
    pub dataset: String,
    pub metric: Metric,
    pub mode_a: Mode,
    pub mode_b: Mode,
    /// Number of ε points paired.
    pub pairs: usize,
    pub result: Result<WilcoxonOutcome, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonOutcome {
    pub n_effective: usize,
    pub statistic: f64,
    pub w_plus: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
    pub verdict: Verdict,
}

pub(crate) fn write_wilcoxon(path: &Path, rows: &[WilcoxonRow]) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record([
        "dataset", "metric", "mode_a", "mode_b", "pairs", "n_effective", "statistic", "w_plus",
        "p_value", "method", "verdict", "note",
    ])
    .map_err(|e| output_error(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.dataset.clone(),
            r.metric.as_str().to_string(),
            r.mode_a.to_string(),
            r.mode_b.to_string(),
            r.pairs.to_string(),
        ];
        match &r.result {
            Ok(o) => {
                rec.extend([
                    o.n_effective.to_string(),
                    o.statistic.to_string(),
                    o.w_plus.to_string(),
                    o.p_value.to_string(),
                    match o.method {
                        WilcoxonMethod::Exact => "exact".into(),
                        WilcoxonMethod::Normal => "normal".into(),
                    },
                    match o.verdict {
                        Verdict::Accepted => "accepted".into(),
                        Verdict::Rejected => "rejected".into(),
                    },
                    String::new(),
                ]);
            }
            Err(note) => {
                rec.extend(std::iter::repeat_n(String::new(), 6));
                rec.push(note.clone());
            }
        }
        w.write_record(&rec).map_err(|e| output_error(path, e))?;
    }
    finish(path, w)
}

/// Every perturbing mode of a run paired with its clean baseline.
pub(crate) fn against_clean(summary: &[SummaryRow]) -> Vec<(Mode, Mode)> {
    let modes: BTreeSet<Mode> = summary.iter().map(|r| r.mode).collect();
    if !modes.contains(&Mode::Clean) {
        return Vec::new();
    }
    modes
        .into_iter()
        .filter(|m| m.uses_epsilon())
        .map(|m| (m, Mode::Clean))
        .collect()
}

fn grid(summary: &[SummaryRow]) -> Vec<f64> {
    let mut g: Vec<f64> = summary.iter().filter_map(|r| r.epsilon).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Per-ε means of `mode` on `dataset`; clean values are broadcast across
/// the grid. `None` when the mode was not run on that dataset.
fn series(
    summary: &[SummaryRow],
    dataset: &str,
    mode: Mode,
    metric: Metric,
    grid: &[f64],
) -> Result<Option<Vec<f64>>, ExperimentError> {
    let rows: Vec<&SummaryRow> = summary
        .iter()
        .filter(|r| r.dataset == dataset && r.mode == mode)
        .collect();
    if rows.is_empty() {
        return Ok(None);
    }
    if !mode.uses_epsilon() {
        return Ok(Some(vec![rows[0].mean_of(metric); grid.len().max(1)]));
    }
    grid.iter()
        .map(|e| {
            rows.iter()
                .find(|r| r.epsilon == Some(*e))
                .map(|r| r.mean_of(metric))
                .ok_or_else(|| {
                    ExperimentError::Compare(format!("{dataset} {mode} has no result at ε = {e}"))
                })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

/// Paired Wilcoxon tests of `a`'s `mode_a` against `b`'s `mode_b` for every
/// dataset, mode pair and metric, pairing per-ε means.
pub fn wilcoxon_table(
    a: &[SummaryRow],
    b: &[SummaryRow],
    pairs: &[(Mode, Mode)],
) -> Result<Vec<WilcoxonRow>, ExperimentError> {
    let datasets_a: BTreeSet<&str> = a.iter().map(|r| r.dataset.as_str()).collect();
    let datasets_b: BTreeSet<&str> = b.iter().map(|r| r.dataset.as_str()).collect();
    if datasets_a != datasets_b {
        return Err(ExperimentError::Compare(format!(
            "dataset mismatch: {datasets_a:?} vs {datasets_b:?}"
        )));
    }
    let (ga, gb) = (grid(a), grid(b));
    if !ga.is_empty() && !gb.is_empty() && ga != gb {
        return Err(ExperimentError::Compare(format!("ε grid mismatch: {ga:?} vs {gb:?}")));
    }
    let g = if ga.is_empty() { gb } else { ga };

    let mut out = Vec::new();
    for dataset in &datasets_a {
        for &(mode_a, mode_b) in pairs {
            for metric in Metric::ALL {
                let sa = series(a, dataset, mode_a, metric, &g)?;
                let sb = series(b, dataset, mode_b, metric, &g)?;
                let (pairs, result) = match (sa, sb) {
                    (Some(x), Some(y)) => (x.len(), test(&x, &y)),
                    _ => (0, Err("mode missing from a run".to_string())),
                };
                out.push(WilcoxonRow {
                    dataset: dataset.to_string(),
                    metric,
                    mode_a,
                    mode_b,
                    pairs,
                    result,
                });
            }
        }
    }
    Ok(out)
}

fn test(a: &[f64], b: &[f64]) -> Result<WilcoxonOutcome, String> {
    match wilcoxon_signed_rank(a, b, ALPHA) {
        Ok(r) => Ok(WilcoxonOutcome {
            n_effective: r.n_effective,
            statistic: r.statistic,
            w_plus: r.w_plus,
            p_value: r.p_value,
            method: r.method,
            verdict: r.verdict,
        }),
        Err(MetricsError::InsufficientPairs(_)) => Err("insufficient paired data".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// Compares two finished runs. With no explicit pairs, every mode present
/// in both runs is compared with itself.
pub fn compare_runs(
    dir_a: &Path,
    dir_b: &Path,
    pairs: Option<&[(Mode, Mode)]>,
) -> Result<Vec<WilcoxonRow>, ExperimentError> {
    let a = read_summary(dir_a)?;
    let b = read_summary(dir_b)?;
    let default: Vec<(Mode, Mode)> = {
        let ma: BTreeSet<Mode> = a.iter().map(|r| r.mode).collect();
        let mb: BTreeSet<Mode> = b.iter().map(|r| r.mode).collect();
        ma.intersection(&mb).map(|&m| (m, m)).collect()
    };
    wilcoxon_table(&a, &b, pairs.unwrap_or(&default))
}

/// Writes a comparison table in the run's Wilcoxon CSV layout.
pub fn write_comparison(path: &Path, rows: &[WilcoxonRow]) -> Result<(), ExperimentError> {
    write_wilcoxon(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::CellSeeds;

    fn row(dataset: &str, mode: Mode, eps: Option<f64>, trial: u32, acc: f64) -> CellRow {
        CellRow {
            key: CellKey {
                dataset: dataset.into(),
                epsilon: eps,
                mode,
                trial,
            },
            seeds: CellSeeds { split: 0, noise: 0 },
            outcome: Ok(Scores {
                accuracy: acc,
                precision: acc,
                recall: acc,
                f1: acc,
            }),
        }
    }

    fn run(shift: f64) -> Vec<SummaryRow> {
        let mut rows = vec![row("d", Mode::Clean, None, 0, 0.9), row("d", Mode::Clean, None, 1, 0.8)];
        for (i, e) in [0.1, 0.5, 1.0, 2.0].into_iter().enumerate() {
            rows.push(row("d", Mode::DpBoth, Some(e), 0, 0.3 + 0.1 * i as f64 + shift));
            rows.push(row("d", Mode::DpBoth, Some(e), 1, 0.35 + 0.1 * i as f64 + shift));
        }
        rows.sort_by(|a, b| row_order(&a.key, &b.key));
        summarize(&rows)
    }

    #[test]
    fn summary_mean_and_sample_std() {
        let s = run(0.0);
        let clean = s.iter().find(|r| r.mode == Mode::Clean).unwrap();
        assert_eq!(clean.trials, 2);
        assert!((clean.mean.accuracy - 0.85).abs() < 1e-15);
        assert!((clean.std.accuracy - (0.005f64).sqrt()).abs() < 1e-15);
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn failures_are_counted_not_averaged() {
        let mut rows = vec![row("d", Mode::Clean, None, 0, 0.5), row("d", Mode::Clean, None, 1, 0.7)];
        rows[1].outcome = Err("boom".into());
        let s = summarize(&rows);
        assert_eq!((s[0].trials, s[0].failed), (1, 1));
        assert_eq!(s[0].mean.accuracy, 0.5);
    }

    #[test]
    fn self_comparison_has_no_pairs() {
        let s = run(0.0);
        let t = wilcoxon_table(&s, &s, &[(Mode::DpBoth, Mode::DpBoth)]).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.iter().all(|r| r.result == Err("insufficient paired data".into())));
    }

    #[test]
    fn clean_is_broadcast_over_the_grid() {
        let s = run(0.0);
        let t = wilcoxon_table(&s, &s, &against_clean(&s)).unwrap();
        let r = t[0].result.clone().unwrap();
        assert_eq!(t[0].pairs, 4);
        assert_eq!(r.w_plus, 0.0);
        // Exact two-sided p with four pairs all on one side.
        assert_eq!(r.p_value, 2.0 / 16.0);
    }

    #[test]
    fn grid_and_dataset_mismatch_are_errors() {
        let a = run(0.0);
        let mut b = run(0.0);
        b.retain(|r| r.epsilon != Some(2.0));
        assert!(matches!(
            wilcoxon_table(&a, &b, &[(Mode::DpBoth, Mode::DpBoth)]),
            Err(ExperimentError::Compare(_))
        ));
        let mut c = run(0.0);
        for r in &mut c {
            r.dataset = "other".into();
        }
        assert!(wilcoxon_table(&a, &c, &[]).is_err());
    }

    #[test]
    fn summary_survives_csv() {
        let dir = tempfile::tempdir().unwrap();
        let s = run(0.0123456789);
        write_summary(&dir.path().join("summary.csv"), &s).unwrap();
        assert_eq!(read_summary(dir.path()).unwrap(), s);
    }
}
