//! Per-column z-score normalization fitted on training rows.

use serde::{Deserialize, Serialize};

use super::DataError;

/// Column means and population standard deviations. Every `std` is > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormalizationParams {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Mean 0, std 1 in every column.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }
}

/// Fits μ and population σ per column. Zero-variance columns get σ = 1.
pub fn fit_normalizer(rows: &[Vec<f64>]) -> Result<NormalizationParams, DataError> {
    if rows.len() < 2 {
        return Err(DataError::Empty(format!(
            "normalizer needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for row in rows {
        if row.len() != d {
            return Err(DataError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(NormalizationParams { mean, std })
}

/// `(x - μ) / σ` per column.
pub fn apply_normalizer(
    rows: &[Vec<f64>],
    params: &NormalizationParams,
) -> Result<Vec<Vec<f64>>, DataError> {
    map_rows(rows, params, |x, m, s| (x - m) / s)
}

/// `x · σ + μ` per column.
pub fn invert_normalizer(
    rows: &[Vec<f64>],
    params: &NormalizationParams,
) -> Result<Vec<Vec<f64>>, DataError> {
    map_rows(rows, params, |z, m, s| z * s + m)
}

fn map_rows(
    rows: &[Vec<f64>],
    params: &NormalizationParams,
    f: impl Fn(f64, f64, f64) -> f64,
) -> Result<Vec<Vec<f64>>, DataError> {
    rows.iter()
        .map(|row| {
            if row.len() != params.dim() {
                return Err(DataError::DimensionMismatch {
                    expected: params.dim(),
                    got: row.len(),
                });
            }
            Ok(row
                .iter()
                .zip(params.mean.iter().zip(&params.std))
                .map(|(&x, (&m, &s))| f(x, m, s))
                .collect())
        })
        .collect()
}
