//! Owner-side data perturbation: every released value is `x + Lap((h - g)/ε)`.

use serde::{Deserialize, Serialize};

use crate::dp::{laplace_scale, LaplaceScale, NoiseSampler, PrivacyBudget};

use super::{attribute_sensitivity, DataError, Dataset, OwnerId, Release, SyntheticDataset};

/// How noise draws are laid out over a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLayout {
    /// One independent draw per cell, scaled by that column's range.
    #[default]
    PerCell = 0,
    /// One draw per record, scaled by the widest column range, added to
    /// every attribute of the record.
    PerRow = 1,
}

/// Perturbs `data` for release by `owner`.
///
/// Draws are taken in row-major order. Columns with zero range are released
/// unchanged and consume no draw. The input is not modified.
pub fn perturb_dataset<S: NoiseSampler + ?Sized>(
    data: &Dataset,
    owner: OwnerId,
    budget: PrivacyBudget,
    layout: NoiseLayout,
    source: &mut S,
) -> Result<SyntheticDataset, DataError> {
    let scales: Vec<LaplaceScale> = data
        .bounds()
        .iter()
        .map(|b| laplace_scale(attribute_sensitivity(b), budget))
        .collect();
    let records = match layout {
        NoiseLayout::PerCell => data
            .records()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&scales)
                    .map(|(&x, &s)| if s.is_zero() { x } else { x + source.laplace(s) })
                    .collect()
            })
            .collect(),
        NoiseLayout::PerRow => {
            let widest = scales
                .iter()
                .copied()
                .max_by(|a, b| a.value().total_cmp(&b.value()))
                .ok_or_else(|| DataError::Invalid("dataset has no attributes".into()))?;
            data.records()
                .iter()
                .map(|row| {
                    let n = if widest.is_zero() { 0.0 } else { source.laplace(widest) };
                    row.iter().map(|x| x + n).collect()
                })
                .collect()
        }
    };
    Ok(SyntheticDataset::from_parts(
        data,
        owner,
        records,
        Release::Perturbed { budget, layout },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttributeBounds, ClassId};
    use crate::dp::{ConstantNoise, NoiseSource, RecordingSampler};

    fn row_dataset(row: Vec<f64>, bounds: Vec<(f64, f64)>) -> Dataset {
        Dataset::new(
            "row",
            (0..row.len()).map(|j| format!("a{j}")).collect(),
            vec!["c".into()],
            vec![row],
            vec![ClassId(0)],
            bounds
                .into_iter()
                .map(|(g, h)| AttributeBounds::new(g, h).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_noise_reproduces_published_owner_row() {
        let d = row_dataset(
            vec![0.7536, 0.9137, 6.1110, -4.0517],
            vec![(-5.0, 7.0), (-5.0, 7.0), (-5.0, 7.0), (-5.0, 7.0)],
        );
        let eps = PrivacyBudget::new(1.0).unwrap();
        for layout in [NoiseLayout::PerCell, NoiseLayout::PerRow] {
            let s = perturb_dataset(&d, OwnerId(2), eps, layout, &mut ConstantNoise(0.8015)).unwrap();
            let want = [1.5551, 1.7152, 6.9125, -3.2502];
            for (got, want) in s.records()[0].iter().zip(want) {
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
            assert_eq!(s.owner(), OwnerId(2));
            assert_eq!(s.labels(), d.labels());
        }
    }

    #[test]
    fn scales_follow_column_ranges() {
        let d = row_dataset(vec![0.5, 3.0, 7.0], vec![(0.0, 1.0), (0.0, 4.0), (7.0, 7.0)]);
        let eps = PrivacyBudget::new(0.5).unwrap();
        let mut rec = RecordingSampler::new(ConstantNoise(0.0));
        perturb_dataset(&d, OwnerId(0), eps, NoiseLayout::PerCell, &mut rec).unwrap();
        let scales: Vec<f64> = rec.draws().iter().map(|d| d.scale).collect();
        assert_eq!(scales, vec![2.0, 8.0]);

        let mut rec = RecordingSampler::new(ConstantNoise(0.0));
        perturb_dataset(&d, OwnerId(0), eps, NoiseLayout::PerRow, &mut rec).unwrap();
        let scales: Vec<f64> = rec.draws().iter().map(|d| d.scale).collect();
        assert_eq!(scales, vec![8.0]);
    }

    #[test]
    fn huge_budget_leaves_values_nearly_unchanged() {
        let d = row_dataset(vec![0.25, 0.75], vec![(0.0, 1.0), (0.0, 1.0)]);
        let eps = PrivacyBudget::new(1e6).unwrap();
        let mut src = NoiseSource::from_seed(5);
        for _ in 0..1000 {
            let s = perturb_dataset(&d, OwnerId(0), eps, NoiseLayout::PerCell, &mut src).unwrap();
            for (a, b) in s.records()[0].iter().zip(&d.records()[0]) {
                assert!((a - b).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn column_means_are_unbiased() {
        let d = row_dataset(vec![0.3, -2.0], vec![(0.0, 1.0), (-4.0, 0.0)]);
        let eps = PrivacyBudget::new(1.0).unwrap();
        let mut src = NoiseSource::from_seed(99);
        let copies = 10_000;
        let mut sums = [0.0; 2];
        for _ in 0..copies {
            let s = perturb_dataset(&d, OwnerId(0), eps, NoiseLayout::PerCell, &mut src).unwrap();
            for (j, v) in s.records()[0].iter().enumerate() {
                sums[j] += v - d.records()[0][j];
            }
        }
        // Laplace(b) has standard deviation b·√2; allow five standard errors.
        for (j, b) in [1.0, 4.0].into_iter().enumerate() {
            let se = b * 2f64.sqrt() / (copies as f64).sqrt();
            assert!((sums[j] / copies as f64).abs() < 5.0 * se);
        }
    }

    #[test]
    fn release_records_budget_and_layout() {
        let d = row_dataset(vec![0.5], vec![(0.0, 1.0)]);
        let eps = PrivacyBudget::new(2.0).unwrap();
        let s = perturb_dataset(&d, OwnerId(1), eps, NoiseLayout::PerRow, &mut ConstantNoise(0.1)).unwrap();
        assert_eq!(
            s.release(),
            Release::Perturbed {
                budget: eps,
                layout: NoiseLayout::PerRow
            }
        );
        assert!(s.differs_from(&d));
    }
}
