//! Seeded train/test split.

use rand::seq::SliceRandom;

use crate::dp::NoiseSource;

use super::{BoundsPolicy, DataError, Dataset};

/// Disjoint train and test parts of one dataset. Both keep the parent's
/// bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    /// Row indices into the parent, in the order they appear in `train`.
    pub train_indices: Vec<usize>,
    /// Row indices into the parent, in the order they appear in `test`.
    pub test_indices: Vec<usize>,
}

/// Training-set size for `n` rows at fraction `z`.
///
/// `floor(n·z)`, with a small tolerance so that products which are integral
/// in exact arithmetic are not truncated by binary rounding.
pub fn train_count(n: usize, z: f64) -> usize {
    (n as f64 * z + 1e-9).floor() as usize
}

/// Shuffles rows with `seed` and takes the first `train_count(n, z)` for
/// training.
pub fn split(data: &Dataset, z: f64, seed: u64) -> Result<SplitPair, DataError> {
    if !(z > 0.0 && z < 1.0) {
        return Err(DataError::Split(format!("fraction must be in (0, 1), got {z}")));
    }
    let n = data.len();
    let n_train = train_count(n, z);
    if n_train == 0 || n_train == n {
        return Err(DataError::Split(format!(
            "{n} rows at fraction {z} leaves an empty side ({n_train} train)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(NoiseSource::from_seed(seed).rng());
    let test_indices = order.split_off(n_train);
    let train_indices = order;
    Ok(SplitPair {
        train: data.subset(&train_indices, BoundsPolicy::Global)?,
        test: data.subset(&test_indices, BoundsPolicy::Global)?,
        train_indices,
        test_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClassId;

    fn line(n: usize) -> Dataset {
        Dataset::from_records(
            "line",
            vec!["x".into()],
            vec!["a".into(), "b".into()],
            (0..n).map(|i| vec![i as f64]).collect(),
            (0..n).map(|i| ClassId((i % 2) as u32)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn published_split_sizes() {
        assert_eq!(train_count(150, 0.9), 135);
        assert_eq!(train_count(303, 0.9), 272);
        assert_eq!(train_count(625, 0.9), 562);
        assert_eq!(train_count(12_960, 0.9), 11_664);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let d = line(303);
        let a = split(&d, 0.9, 17).unwrap();
        let b = split(&d, 0.9, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train.len(), a.test.len()), (272, 31));
        let mut all: Vec<usize> = a.train_indices.iter().chain(&a.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..303).collect::<Vec<_>>());
        let c = split(&d, 0.9, 18).unwrap();
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn rows_follow_their_indices() {
        let d = line(20);
        let s = split(&d, 0.5, 3).unwrap();
        for (row, &i) in s.test.records().iter().zip(&s.test_indices) {
            assert_eq!(row[0], i as f64);
        }
    }

    #[test]
    fn rejects_bad_fractions_and_empty_sides() {
        let d = line(5);
        assert!(split(&d, 0.0, 1).is_err());
        assert!(split(&d, 1.0, 1).is_err());
        assert!(split(&d, 0.1, 1).is_err());
        assert!(split(&d, 1.0 - 1e-12, 1).is_err());
    }
}
