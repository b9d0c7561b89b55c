//! Labeled numeric datasets and the owner-side release path.
//!
//! [`Dataset`] is raw data: every value lies inside its declared
//! [`AttributeBounds`]. [`SyntheticDataset`] is what leaves a data owner. The
//! two types share a shape but no operation accepts one in place of the
//! other.

mod loader;
mod manifest;
mod normalize;
mod perturb;
mod split;

pub use loader::{load_csv, load_csv_with_schema_file, ColumnKind, ColumnSpec, Schema};
pub use manifest::{file_sha256, DatasetManifest};
pub use normalize::{apply_normalizer, fit_normalizer, invert_normalizer, NormalizationParams};
pub use perturb::{perturb_dataset, NoiseLayout};
pub use split::{split, train_count, SplitPair};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::{DpError, PrivacyBudget, Sensitivity};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column `{column}`: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid bounds: lower {lower} > upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid split: {0}")]
    Split(String),
    #[error(transparent)]
    Dp(#[from] DpError),
}

/// Class label, an index into the dataset's class list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Identifier of a data owner, used as provenance on released data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OwnerId(pub u32);

/// Closed range `[lower, upper]` of one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeBounds {
    lower: f64,
    upper: f64,
}

impl AttributeBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self, DataError> {
        if !lower.is_finite() || !upper.is_finite() || upper < lower {
            return Err(DataError::InvalidBounds { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// Per-column (min, max) of `rows`.
    pub fn of_columns(rows: &[Vec<f64>]) -> Result<Vec<Self>, DataError> {
        let first = rows
            .first()
            .ok_or_else(|| DataError::Empty("no rows to bound".into()))?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for row in rows {
            if row.len() != lo.len() {
                return Err(DataError::DimensionMismatch {
                    expected: lo.len(),
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        lo.into_iter()
            .zip(hi)
            .map(|(l, h)| Self::new(l, h))
            .collect()
    }
}

/// Sensitivity of releasing a bounded attribute as-is: `h - g`.
pub fn attribute_sensitivity(bounds: &AttributeBounds) -> Sensitivity {
    Sensitivity::new(bounds.width()).expect("bounds width is finite and non-negative")
}

/// Which bounds an owner-side partition carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsPolicy {
    /// Keep the parent dataset's declared bounds.
    #[default]
    Global,
    /// Recompute (min, max) from the partition's own rows.
    PerOwner,
}

/// Raw labeled data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    attributes: Vec<String>,
    classes: Vec<String>,
    records: Vec<Vec<f64>>,
    labels: Vec<ClassId>,
    bounds: Vec<AttributeBounds>,
}

impl Dataset {
    /// Validates shape, finiteness, label range and bounds membership.
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<String>,
        classes: Vec<String>,
        records: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        bounds: Vec<AttributeBounds>,
    ) -> Result<Self, DataError> {
        let d = attributes.len();
        if records.is_empty() {
            return Err(DataError::Empty("dataset has no records".into()));
        }
        if labels.len() != records.len() {
            return Err(DataError::Invalid(format!(
                "{} labels for {} records",
                labels.len(),
                records.len()
            )));
        }
        if bounds.len() != d {
            return Err(DataError::DimensionMismatch {
                expected: d,
                got: bounds.len(),
            });
        }
        for (i, row) in records.iter().enumerate() {
            if row.len() != d {
                return Err(DataError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::Invalid(format!("record {i} attribute {j} is {v}")));
                }
                if !bounds[j].contains(v) {
                    return Err(DataError::Invalid(format!(
                        "record {i} attribute {j} = {v} outside [{}, {}]",
                        bounds[j].lower, bounds[j].upper
                    )));
                }
            }
        }
        if let Some(bad) = labels.iter().find(|c| c.0 as usize >= classes.len()) {
            return Err(DataError::Invalid(format!(
                "label {bad} outside {} classes",
                classes.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            attributes,
            classes,
            records,
            labels,
            bounds,
        })
    }

    /// Builds a dataset whose bounds are the per-column (min, max) of `records`.
    pub fn from_records(
        name: impl Into<String>,
        attributes: Vec<String>,
        classes: Vec<String>,
        records: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
    ) -> Result<Self, DataError> {
        let bounds = AttributeBounds::of_columns(&records)?;
        Self::new(name, attributes, classes, records, labels, bounds)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn bounds(&self) -> &[AttributeBounds] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], policy: BoundsPolicy) -> Result<Dataset, DataError> {
        let records: Vec<Vec<f64>> = indices.iter().map(|&i| self.records[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let bounds = match policy {
            BoundsPolicy::Global => self.bounds.clone(),
            BoundsPolicy::PerOwner => AttributeBounds::of_columns(&records)?,
        };
        Dataset::new(
            self.name.clone(),
            self.attributes.clone(),
            self.classes.clone(),
            records,
            labels,
            bounds,
        )
    }

    /// Deals rows round-robin into `parts` partitions (fewer if there are
    /// fewer rows than parts).
    pub fn partition(&self, parts: usize, policy: BoundsPolicy) -> Result<Vec<Dataset>, DataError> {
        if parts == 0 {
            return Err(DataError::Invalid("cannot partition into zero parts".into()));
        }
        let parts = parts.min(self.len());
        (0..parts)
            .map(|p| {
                let idx: Vec<usize> = (p..self.len()).step_by(parts).collect();
                self.subset(&idx, policy)
            })
            .collect()
    }

    /// Per-class record counts, indexed by class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for c in &self.labels {
            counts[c.0 as usize] += 1;
        }
        counts
    }
}

/// How a released dataset was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Release {
    Perturbed {
        budget: PrivacyBudget,
        layout: NoiseLayout,
    },
    /// Raw values passed through without noise. Only baseline experiment modes
    /// build these; the protocol audit reports them.
    Unperturbed,
}

/// Data as released by an owner.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    name: String,
    owner: OwnerId,
    attributes: Vec<String>,
    classes: Vec<String>,
    records: Vec<Vec<f64>>,
    labels: Vec<ClassId>,
    source_bounds: Vec<AttributeBounds>,
    release: Release,
}

impl SyntheticDataset {
    pub(crate) fn from_parts(
        raw: &Dataset,
        owner: OwnerId,
        records: Vec<Vec<f64>>,
        release: Release,
    ) -> Self {
        Self {
            name: raw.name.clone(),
            owner,
            attributes: raw.attributes.clone(),
            classes: raw.classes.clone(),
            records,
            labels: raw.labels.clone(),
            source_bounds: raw.bounds.clone(),
            release,
        }
    }

    /// Release without noise. Not private; exists for the clean and
    /// model-only baselines.
    pub fn unperturbed(raw: &Dataset, owner: OwnerId) -> Self {
        Self::from_parts(raw, owner, raw.records.clone(), Release::Unperturbed)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn owner(&self) -> OwnerId {
        self.owner
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    /// Bounds the noise was calibrated against. Released values may fall
    /// outside them.
    pub fn source_bounds(&self) -> &[AttributeBounds] {
        &self.source_bounds
    }

    pub fn release(&self) -> Release {
        self.release
    }

    pub fn is_perturbed(&self) -> bool {
        matches!(self.release, Release::Perturbed { .. })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when at least one released cell differs from `raw`.
    pub fn differs_from(&self, raw: &Dataset) -> bool {
        self.records.len() != raw.records.len()
            || self
                .records
                .iter()
                .zip(&raw.records)
                .any(|(a, b)| a.iter().zip(b).any(|(x, y)| x != y))
    }

    /// Canonical byte encoding used for digests.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(self.name.as_bytes());
        out.push(0);
        out.extend_from_slice(&self.owner.0.to_le_bytes());
        match self.release {
            Release::Perturbed { budget, layout } => {
                out.push(1);
                out.extend_from_slice(&budget.epsilon().to_bits().to_le_bytes());
                out.push(layout as u8);
            }
            Release::Unperturbed => out.push(0),
        }
        for (row, label) in self.records.iter().zip(&self.labels) {
            for v in row {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            out.extend_from_slice(&label.0.to_le_bytes());
        }
        out
    }
}

/// Concatenates released datasets into one training pool.
///
/// All parts must share attribute and class lists.
pub fn pool(parts: &[SyntheticDataset]) -> Result<(Vec<Vec<f64>>, Vec<ClassId>), DataError> {
    let first = parts
        .first()
        .ok_or_else(|| DataError::Empty("nothing to pool".into()))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for p in parts {
        if p.attributes != first.attributes || p.classes != first.classes {
            return Err(DataError::Invalid(format!(
                "cannot pool `{}` with `{}`: schemas differ",
                p.name, first.name
            )));
        }
        rows.extend(p.records.iter().cloned());
        labels.extend_from_slice(&p.labels);
    }
    Ok((rows, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy() -> Dataset {
        Dataset::from_records(
            "toy",
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![
                vec![0.0, 1.0],
                vec![1.0, 3.0],
                vec![2.0, 5.0],
                vec![3.0, 7.0],
                vec![4.0, 9.0],
            ],
            vec![ClassId(0), ClassId(0), ClassId(1), ClassId(1), ClassId(1)],
        )
        .unwrap()
    }

    #[test]
    fn sensitivity_examples() {
        let s = |g, h| attribute_sensitivity(&AttributeBounds::new(g, h).unwrap()).value();
        assert_eq!(s(0.0, 1.0), 1.0);
        assert!((s(-4.2636, 6.2122) - 10.4758).abs() < 1e-12);
        assert_eq!(s(3.5, 3.5), 0.0);
    }

    #[test]
    fn sensitivity_is_translation_invariant() {
        for shift in [-100.0, -1.5, 0.0, 2.25, 1e3] {
            let a = AttributeBounds::new(-4.2636, 6.2122).unwrap();
            let b = AttributeBounds::new(a.lower() + shift, a.upper() + shift).unwrap();
            assert!((attribute_sensitivity(&a).value() - attribute_sensitivity(&b).value()).abs() < 1e-9);
        }
    }

    #[test]
    fn bounds_reject_inverted_range() {
        assert!(AttributeBounds::new(2.0, 1.0).is_err());
        assert!(AttributeBounds::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_bounds_values() {
        let err = Dataset::new(
            "bad",
            vec!["a".into()],
            vec!["x".into()],
            vec![vec![5.0]],
            vec![ClassId(0)],
            vec![AttributeBounds::new(0.0, 1.0).unwrap()],
        );
        assert!(matches!(err, Err(DataError::Invalid(_))));
    }

    #[test]
    fn dataset_rejects_ragged_rows_and_bad_labels() {
        let ragged = Dataset::from_records(
            "r",
            vec!["a".into(), "b".into()],
            vec!["x".into()],
            vec![vec![1.0, 2.0], vec![1.0]],
            vec![ClassId(0), ClassId(0)],
        );
        assert!(ragged.is_err());
        let label = Dataset::from_records(
            "l",
            vec!["a".into()],
            vec!["x".into()],
            vec![vec![1.0]],
            vec![ClassId(3)],
        );
        assert!(label.is_err());
    }

    #[test]
    fn partition_keeps_global_bounds_by_default() {
        let d = toy();
        let parts = d.partition(2, BoundsPolicy::Global).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len() + parts[1].len(), d.len());
        assert_eq!(parts[0].bounds(), d.bounds());
        let own = d.partition(5, BoundsPolicy::PerOwner).unwrap();
        assert!(own.iter().all(|p| p.bounds().iter().all(|b| b.width() == 0.0)));
    }

    #[test]
    fn class_counts_follow_labels() {
        assert_eq!(toy().class_counts(), vec![2, 3]);
    }

    #[test]
    fn unperturbed_release_is_flagged() {
        let d = toy();
        let s = SyntheticDataset::unperturbed(&d, OwnerId(0));
        assert!(!s.is_perturbed());
        assert!(!s.differs_from(&d));
    }
}
