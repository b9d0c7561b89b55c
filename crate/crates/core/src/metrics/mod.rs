//! Classification metrics and rank statistics.
//!
//! Multiclass precision and recall are one-vs-rest per class and averaged
//! with weights proportional to each class's support in the actual labels.
//! Under that weighting recall always equals accuracy. The multiset variant
//! compares the bags of predicted and actual labels without pairing them.

mod rank;
mod wilcoxon;

pub use rank::{average_ranks, spearman};
pub use wilcoxon::{
    normal_approximation, wilcoxon_signed_rank, Continuity, Verdict, WilcoxonMethod, WilcoxonResult,
    EXACT_LIMIT,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ClassId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no labels to score")]
    Empty,
    #[error("length mismatch: {predicted} predicted vs {actual} actual")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("insufficient paired data: {0} non-zero differences, need at least 3")]
    InsufficientPairs(usize),
    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("non-finite sample value")]
    NonFinite,
}

fn check(predicted: &[ClassId], actual: &[ClassId]) -> Result<(), MetricsError> {
    if predicted.len() != actual.len() {
        return Err(MetricsError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Fraction of positions where the labels agree.
pub fn accuracy(predicted: &[ClassId], actual: &[ClassId]) -> Result<f64, MetricsError> {
    check(predicted, actual)?;
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / actual.len() as f64)
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub class: ClassId,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
}

impl ClassTally {
    pub fn support(&self) -> usize {
        self.true_positive + self.false_negative
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_positive)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positive, self.support())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Tallies for every class appearing in either sequence, in id order.
pub fn tallies(predicted: &[ClassId], actual: &[ClassId]) -> Result<Vec<ClassTally>, MetricsError> {
    check(predicted, actual)?;
    let mut map: BTreeMap<ClassId, ClassTally> = BTreeMap::new();
    for &c in predicted.iter().chain(actual) {
        map.entry(c).or_insert(ClassTally {
            class: c,
            true_positive: 0,
            false_positive: 0,
            false_negative: 0,
            true_negative: 0,
        });
    }
    let n = actual.len();
    for (&p, &a) in predicted.iter().zip(actual) {
        if p == a {
            map.get_mut(&a).unwrap().true_positive += 1;
        } else {
            map.get_mut(&p).unwrap().false_positive += 1;
            map.get_mut(&a).unwrap().false_negative += 1;
        }
    }
    Ok(map
        .into_values()
        .map(|mut t| {
            t.true_negative = n - t.true_positive - t.false_positive - t.false_negative;
            t
        })
        .collect())
}

/// Support-weighted one-vs-rest precision and recall.
pub fn precision_recall(
    predicted: &[ClassId],
    actual: &[ClassId],
) -> Result<(f64, f64), MetricsError> {
    let t = tallies(predicted, actual)?;
    Ok(weighted(&t, actual.len()))
}

fn weighted(tallies: &[ClassTally], n: usize) -> (f64, f64) {
    let n = n as f64;
    tallies.iter().fold((0.0, 0.0), |(p, r), t| {
        let w = t.support() as f64 / n;
        (p + w * t.precision(), r + w * t.recall())
    })
}

/// Multiset precision and recall from raw counts: `common / retrieved` and
/// `common / relevant`.
pub fn literal_from_counts(common: usize, retrieved: usize, relevant: usize) -> (f64, f64) {
    (ratio(common, retrieved), ratio(common, relevant))
}

/// Multiset precision and recall: the size of the bag intersection of the
/// two label collections over the size of each.
pub fn precision_recall_literal(
    retrieved: &[ClassId],
    relevant: &[ClassId],
) -> Result<(f64, f64), MetricsError> {
    if retrieved.is_empty() || relevant.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut bag: BTreeMap<ClassId, usize> = BTreeMap::new();
    for &c in relevant {
        *bag.entry(c).or_default() += 1;
    }
    let mut common = 0;
    for c in retrieved {
        if let Some(k) = bag.get_mut(c).filter(|k| **k > 0) {
            *k -= 1;
            common += 1;
        }
    }
    Ok(literal_from_counts(common, retrieved.len(), relevant.len()))
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n: usize,
    pub per_class: Vec<ClassTally>,
}

impl ClassificationReport {
    pub fn from_labels(predicted: &[ClassId], actual: &[ClassId]) -> Result<Self, MetricsError> {
        let per_class = tallies(predicted, actual)?;
        let (precision, recall) = weighted(&per_class, actual.len());
        Ok(Self {
            accuracy: accuracy(predicted, actual)?,
            precision,
            recall,
            f1: f1(precision, recall),
            n: actual.len(),
            per_class,
        })
    }
}
