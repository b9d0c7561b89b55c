//! Gaussian naive Bayes with Laplace-perturbed parameters.
//!
//! A model stores, per class, a count and a (mean, std) pair per attribute.
//! Prediction is the Bayes decision rule evaluated in log space. The
//! classifier owner releases a copy whose means, standard deviations and
//! counts have each received Laplace noise at the full budget ε: the
//! parameters describe disjoint slices of the data, so their budgets compose
//! in parallel rather than adding up.

mod text;

pub use text::{from_text, to_text};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{AttributeBounds, ClassId};
use crate::dp::{laplace_scale, DpError, LaplaceScale, NoiseSampler, PrivacyBudget, Sensitivity};

/// Smallest standard deviation a model may hold.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// Smallest class count a model may hold.
pub const COUNT_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("no training rows")]
    Empty,
    #[error("{labels} labels for {rows} rows")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("dimension mismatch: model has {expected} attributes, row has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("double perturbation: model is already noisy")]
    DoublePerturbation,
    #[error("expected {expected} sensitivity entries, got {got}")]
    SensitivityMismatch { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("model text line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Dp(#[from] DpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub mean: f64,
    pub std: f64,
}

/// Per-class parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub class: ClassId,
    /// Training count; fractional once perturbed.
    pub count: f64,
    pub stats: Vec<AttributeStats>,
}

/// Whether a model's parameters carry noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelTag {
    Raw,
    Noisy {
        epsilon: PrivacyBudget,
        count_noise_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    classes: Vec<ClassParams>,
    n_attributes: usize,
    tag: ModelTag,
}

impl NbModel {
    /// Validates unique class ids, attribute counts and parameter floors.
    /// Classes are stored sorted by id.
    pub fn new(
        mut classes: Vec<ClassParams>,
        n_attributes: usize,
        tag: ModelTag,
    ) -> Result<Self, ModelError> {
        if classes.is_empty() {
            return Err(ModelError::Invalid("model has no classes".into()));
        }
        classes.sort_by_key(|c| c.class);
        if classes.windows(2).any(|w| w[0].class == w[1].class) {
            return Err(ModelError::Invalid("duplicate class id".into()));
        }
        for c in &classes {
            if c.stats.len() != n_attributes {
                return Err(ModelError::DimensionMismatch {
                    expected: n_attributes,
                    got: c.stats.len(),
                });
            }
            if !(c.count.is_finite() && c.count > 0.0) {
                return Err(ModelError::Invalid(format!(
                    "class {} has count {}",
                    c.class, c.count
                )));
            }
            if let Some(s) = c
                .stats
                .iter()
                .find(|s| !s.mean.is_finite() || !(s.std.is_finite() && s.std > 0.0))
            {
                return Err(ModelError::Invalid(format!(
                    "class {} has mean {} std {}",
                    c.class, s.mean, s.std
                )));
            }
        }
        Ok(Self {
            classes,
            n_attributes,
            tag,
        })
    }

    pub fn classes(&self) -> &[ClassParams] {
        &self.classes
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn is_noisy(&self) -> bool {
        matches!(self.tag, ModelTag::Noisy { .. })
    }

    pub fn class(&self, id: ClassId) -> Option<&ClassParams> {
        self.classes.iter().find(|c| c.class == id)
    }

    /// Normalized class priors, in class order.
    pub fn priors(&self) -> Vec<f64> {
        let total: f64 = self.classes.iter().map(|c| c.count).sum();
        self.classes.iter().map(|c| c.count / total).collect()
    }
}

/// Something `train` had to paper over.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingWarning {
    /// Fewer than two samples: every σ of the class is the floor.
    SingleSample { class: ClassId },
    /// Zero sample variance, σ set to the floor.
    ZeroVariance { class: ClassId, attribute: usize },
}

/// Fits a raw model over the classes present in `labels`.
pub fn train(rows: &[Vec<f64>], labels: &[ClassId]) -> Result<NbModel, ModelError> {
    train_with_warnings(rows, labels).map(|(m, _)| m)
}

/// As [`train`], also returning the degenerate cases it clamped.
pub fn train_with_warnings(
    rows: &[Vec<f64>],
    labels: &[ClassId],
) -> Result<(NbModel, Vec<TrainingWarning>), ModelError> {
    if rows.is_empty() {
        return Err(ModelError::Empty);
    }
    if rows.len() != labels.len() {
        return Err(ModelError::LabelMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    let d = rows[0].len();
    let mut by_class: BTreeMap<ClassId, Vec<&[f64]>> = BTreeMap::new();
    for (row, &label) in rows.iter().zip(labels) {
        if row.len() != d {
            return Err(ModelError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        by_class.entry(label).or_default().push(row);
    }

    let mut warnings = Vec::new();
    let mut classes = Vec::with_capacity(by_class.len());
    for (class, members) in by_class {
        let n = members.len() as f64;
        if members.len() < 2 {
            warnings.push(TrainingWarning::SingleSample { class });
        }
        let stats = (0..d)
            .map(|j| {
                let mean = members.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = members.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                let mut std = var.sqrt();
                if std < SIGMA_FLOOR {
                    if members.len() >= 2 {
                        warnings.push(TrainingWarning::ZeroVariance { class, attribute: j });
                    }
                    std = SIGMA_FLOOR;
                }
                AttributeStats { mean, std }
            })
            .collect();
        classes.push(ClassParams {
            class,
            count: n,
            stats,
        });
    }
    Ok((NbModel::new(classes, d, ModelTag::Raw)?, warnings))
}

/// Sensitivities of one class's parameters, per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSensitivities {
    pub mean: Vec<Sensitivity>,
    pub std: Vec<Sensitivity>,
}

/// Mean sensitivity `(h - g)/(n + 1)` and std sensitivity `n (h - g)/(n + 1)`
/// for a class with `n` training rows.
pub fn model_sensitivities(
    bounds: &[AttributeBounds],
    n: usize,
) -> Result<ModelSensitivities, ModelError> {
    if n == 0 {
        return Err(ModelError::Invalid("sensitivity needs n >= 1".into()));
    }
    let n = n as f64;
    let mut mean = Vec::with_capacity(bounds.len());
    let mut std = Vec::with_capacity(bounds.len());
    for b in bounds {
        let m = b.width() / (n + 1.0);
        mean.push(Sensitivity::new(m)?);
        std.push(Sensitivity::new(n * m)?);
    }
    Ok(ModelSensitivities { mean, std })
}

/// One [`ModelSensitivities`] per class of `model`, using each class's
/// training count.
pub fn class_sensitivities(
    model: &NbModel,
    bounds: &[AttributeBounds],
) -> Result<Vec<ModelSensitivities>, ModelError> {
    if bounds.len() != model.n_attributes {
        return Err(ModelError::DimensionMismatch {
            expected: model.n_attributes,
            got: bounds.len(),
        });
    }
    model
        .classes
        .iter()
        .map(|c| model_sensitivities(bounds, c.count.round().max(1.0) as usize))
        .collect()
}

/// Releases a noisy copy of a raw model.
///
/// For each class in id order and each attribute, μ then σ receive
/// `Lap(sens/ε)`; afterwards each count receives `Lap(count_noise_scale)`.
/// Zero sensitivities and a zero count scale consume no draw. σ and counts
/// are clamped to their floors.
pub fn perturb_model<S: NoiseSampler + ?Sized>(
    model: &NbModel,
    sensitivities: &[ModelSensitivities],
    budget: PrivacyBudget,
    count_noise_scale: f64,
    source: &mut S,
) -> Result<NbModel, ModelError> {
    if model.is_noisy() {
        return Err(ModelError::DoublePerturbation);
    }
    if sensitivities.len() != model.classes.len() {
        return Err(ModelError::SensitivityMismatch {
            expected: model.classes.len(),
            got: sensitivities.len(),
        });
    }
    let count_scale = LaplaceScale::new(count_noise_scale)?;
    let mut draw = |sens: Sensitivity| {
        let scale = laplace_scale(sens, budget);
        if scale.is_zero() {
            0.0
        } else {
            source.laplace(scale)
        }
    };

    let mut classes = model.classes.clone();
    for (c, sens) in classes.iter_mut().zip(sensitivities) {
        if sens.mean.len() != model.n_attributes || sens.std.len() != model.n_attributes {
            return Err(ModelError::SensitivityMismatch {
                expected: model.n_attributes,
                got: sens.mean.len().min(sens.std.len()),
            });
        }
        for (j, s) in c.stats.iter_mut().enumerate() {
            s.mean += draw(sens.mean[j]);
            s.std = (s.std + draw(sens.std[j])).max(SIGMA_FLOOR);
        }
    }
    for c in &mut classes {
        if !count_scale.is_zero() {
            c.count += source.laplace(count_scale);
        }
        c.count = c.count.max(COUNT_FLOOR);
    }
    NbModel::new(
        classes,
        model.n_attributes,
        ModelTag::Noisy {
            epsilon: budget,
            count_noise_scale,
        },
    )
}

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// `ln N(x; mean, std)`.
pub fn log_gaussian(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -std.ln() - HALF_LN_TWO_PI - 0.5 * z * z
}

/// Unnormalized log posterior of each class, in class order.
pub fn log_posteriors(model: &NbModel, row: &[f64]) -> Result<Vec<f64>, ModelError> {
    if row.len() != model.n_attributes {
        return Err(ModelError::DimensionMismatch {
            expected: model.n_attributes,
            got: row.len(),
        });
    }
    let total: f64 = model.classes.iter().map(|c| c.count).sum();
    Ok(model
        .classes
        .iter()
        .map(|c| {
            (c.count / total).ln()
                + c.stats
                    .iter()
                    .zip(row)
                    .map(|(s, &x)| log_gaussian(x, s.mean, s.std))
                    .sum::<f64>()
        })
        .collect())
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Class with the highest posterior; ties go to the smallest class id.
pub fn predict(model: &NbModel, row: &[f64]) -> Result<ClassId, ModelError> {
    let scores = log_posteriors(model, row)?;
    let i = argmax(&scores).expect("model has at least one class");
    Ok(model.classes[i].class)
}

pub fn predict_batch(model: &NbModel, rows: &[Vec<f64>]) -> Result<Vec<ClassId>, ModelError> {
    rows.iter().map(|r| predict(model, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{ConstantNoise, NoiseSource, RecordingSampler, ScriptedNoise};

    fn eps(e: f64) -> PrivacyBudget {
        PrivacyBudget::new(e).unwrap()
    }

    fn symmetric() -> NbModel {
        NbModel::new(
            vec![
                ClassParams {
                    class: ClassId(0),
                    count: 5.0,
                    stats: vec![AttributeStats { mean: -1.0, std: 1.0 }],
                },
                ClassParams {
                    class: ClassId(1),
                    count: 5.0,
                    stats: vec![AttributeStats { mean: 1.0, std: 1.0 }],
                },
            ],
            1,
            ModelTag::Raw,
        )
        .unwrap()
    }

    #[test]
    fn zero_variance_classes_are_floored() {
        let rows = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        let labels = [ClassId(0), ClassId(0), ClassId(1), ClassId(1)];
        let (m, w) = train_with_warnings(&rows, &labels).unwrap();
        assert_eq!(m.classes()[0].stats[0], AttributeStats { mean: 0.0, std: SIGMA_FLOOR });
        assert_eq!(m.classes()[1].stats[0].mean, 1.0);
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn population_std() {
        let m = train(&[vec![1.0], vec![3.0]], &[ClassId(4), ClassId(4)]).unwrap();
        assert_eq!(m.classes()[0].stats[0], AttributeStats { mean: 2.0, std: 1.0 });
        assert_eq!(m.classes()[0].count, 2.0);
    }

    #[test]
    fn single_sample_class_warns() {
        let (_, w) = train_with_warnings(&[vec![1.0]], &[ClassId(0)]).unwrap();
        assert_eq!(w, vec![TrainingWarning::SingleSample { class: ClassId(0) }]);
    }

    #[test]
    fn training_errors() {
        assert_eq!(train(&[], &[]), Err(ModelError::Empty));
        assert!(matches!(
            train(&[vec![1.0]], &[]),
            Err(ModelError::LabelMismatch { .. })
        ));
        assert!(matches!(
            train(&[vec![1.0], vec![1.0, 2.0]], &[ClassId(0), ClassId(0)]),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sensitivity_examples() {
        let b = [AttributeBounds::new(0.0, 1.0).unwrap(), AttributeBounds::new(2.0, 2.0).unwrap()];
        let s = model_sensitivities(&b, 9).unwrap();
        assert!((s.mean[0].value() - 0.1).abs() < 1e-15);
        assert!((s.std[0].value() - 0.9).abs() < 1e-15);
        assert_eq!(s.mean[1].value(), 0.0);
        assert_eq!(s.std[1].value(), 0.0);
        assert!(model_sensitivities(&b, 0).is_err());
    }

    #[test]
    fn published_parameter_perturbation() {
        let raw = NbModel::new(
            vec![ClassParams {
                class: ClassId(0),
                count: 10.0,
                stats: vec![AttributeStats { mean: 16.3258, std: 9.6894 }],
            }],
            1,
            ModelTag::Raw,
        )
        .unwrap();
        let sens = class_sensitivities(&raw, &[AttributeBounds::new(0.0, 30.0).unwrap()]).unwrap();
        let mut noise = ScriptedNoise::new([0.5654, 0.3651, 0.0]);
        let noisy = perturb_model(&raw, &sens, eps(1.0), 1.0, &mut noise).unwrap();
        let s = noisy.classes()[0].stats[0];
        assert!((s.mean - 16.8912).abs() < 1e-9);
        assert!((s.std - 10.0545).abs() < 1e-9);
        assert_eq!(raw.classes()[0].stats[0].mean, 16.3258);
    }

    #[test]
    fn full_budget_reaches_every_parameter() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i % 5) as f64]).collect();
        let labels: Vec<ClassId> = (0..12).map(|i| ClassId(i % 3)).collect();
        let m = train(&rows, &labels).unwrap();
        let bounds = [AttributeBounds::new(0.0, 11.0).unwrap(), AttributeBounds::new(0.0, 4.0).unwrap()];
        let sens = class_sensitivities(&m, &bounds).unwrap();
        let e = 0.5;
        let mut rec = RecordingSampler::new(ConstantNoise(0.0));
        perturb_model(&m, &sens, eps(e), 1.0, &mut rec).unwrap();
        let scales: Vec<f64> = rec.draws().iter().map(|d| d.scale).collect();
        let mut want = Vec::new();
        for _class in 0..3 {
            let n = 4.0;
            for w in [11.0, 4.0] {
                want.push(w / (n + 1.0) / e);
                want.push(n * w / (n + 1.0) / e);
            }
        }
        want.extend([1.0; 3]);
        assert_eq!(scales.len(), want.len());
        for (g, w) in scales.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn noise_is_additive_before_clamping() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.1]).collect();
        let labels: Vec<ClassId> = (0..20).map(|i| ClassId(i % 2)).collect();
        let m = train(&rows, &labels).unwrap();
        let sens = class_sensitivities(&m, &[AttributeBounds::new(0.0, 1.9).unwrap()]).unwrap();
        let mut rec = RecordingSampler::new(NoiseSource::from_seed(3));
        let noisy = perturb_model(&m, &sens, eps(1e6), 0.0, &mut rec).unwrap();
        let draws = rec.draws();
        for (k, (a, b)) in m.classes().iter().zip(noisy.classes()).enumerate() {
            assert!((b.stats[0].mean - a.stats[0].mean - draws[2 * k].value).abs() < 1e-15);
            assert!((b.stats[0].std - a.stats[0].std - draws[2 * k + 1].value).abs() < 1e-15);
            assert!((b.stats[0].mean - a.stats[0].mean).abs() < 1e-3);
            assert_eq!(b.count, a.count);
        }
    }

    #[test]
    fn clamps_sigma_and_counts() {
        let m = train(&[vec![0.0], vec![1.0]], &[ClassId(0), ClassId(0)]).unwrap();
        let sens = class_sensitivities(&m, &[AttributeBounds::new(0.0, 1.0).unwrap()]).unwrap();
        let mut noise = ScriptedNoise::new([0.0, -10.0, -10.0]);
        let noisy = perturb_model(&m, &sens, eps(1.0), 1.0, &mut noise).unwrap();
        assert_eq!(noisy.classes()[0].stats[0].std, SIGMA_FLOOR);
        assert_eq!(noisy.classes()[0].count, COUNT_FLOOR);
    }

    #[test]
    fn double_perturbation_is_rejected() {
        let m = symmetric();
        let sens = class_sensitivities(&m, &[AttributeBounds::new(-1.0, 1.0).unwrap()]).unwrap();
        let noisy = perturb_model(&m, &sens, eps(1.0), 1.0, &mut ConstantNoise(0.1)).unwrap();
        assert!(noisy.is_noisy());
        assert_eq!(
            perturb_model(&noisy, &sens, eps(1.0), 1.0, &mut ConstantNoise(0.1)),
            Err(ModelError::DoublePerturbation)
        );
    }

    #[test]
    fn symmetric_tie_goes_to_smaller_id() {
        let m = symmetric();
        assert_eq!(predict(&m, &[0.0]).unwrap(), ClassId(0));
        assert_eq!(predict(&m, &[0.9]).unwrap(), ClassId(1));
        assert_eq!(predict(&m, &[-0.1]).unwrap(), ClassId(0));
    }

    #[test]
    fn prediction_checks_dimension() {
        assert!(matches!(
            predict(&symmetric(), &[0.0, 1.0]),
            Err(ModelError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn matches_brute_force_posterior() {
        let rows = vec![
            vec![1.0, 2.0],
            vec![1.5, 1.8],
            vec![5.0, 8.0],
            vec![6.0, 9.0],
            vec![1.0, 0.6],
            vec![9.0, 11.0],
            vec![8.0, 2.0],
            vec![10.0, 2.0],
            vec![9.0, 3.0],
            vec![2.0, 1.0],
        ];
        let labels: Vec<ClassId> = [0, 0, 1, 1, 0, 1, 2, 2, 2, 0].map(ClassId).to_vec();
        let m = train(&rows, &labels).unwrap();
        for row in &rows {
            // Plain-probability oracle: prior times product of densities.
            let mut best = (f64::MIN, 0u32);
            for c in 0u32..3 {
                let members: Vec<&Vec<f64>> = rows
                    .iter()
                    .zip(&labels)
                    .filter(|(_, l)| l.0 == c)
                    .map(|(r, _)| r)
                    .collect();
                let n = members.len() as f64;
                let mut p = n / rows.len() as f64;
                for j in 0..2 {
                    let mu = members.iter().map(|r| r[j]).sum::<f64>() / n;
                    let sd = (members.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n).sqrt();
                    p *= (-(row[j] - mu).powi(2) / (2.0 * sd * sd)).exp()
                        / (sd * (2.0 * std::f64::consts::PI).sqrt());
                }
                if p > best.0 {
                    best = (p, c);
                }
            }
            assert_eq!(predict(&m, row).unwrap(), ClassId(best.1));
        }
    }

    #[test]
    fn batch_matches_singles() {
        let m = symmetric();
        assert!(predict_batch(&m, &[]).unwrap().is_empty());
        let rows: Vec<Vec<f64>> = (-5..5).map(|i| vec![i as f64 * 0.3]).collect();
        let batch = predict_batch(&m, &rows).unwrap();
        for (r, p) in rows.iter().zip(batch) {
            assert_eq!(predict(&m, r).unwrap(), p);
        }
    }

    #[test]
    fn extreme_inputs_stay_finite() {
        let m = NbModel::new(
            vec![ClassParams {
                class: ClassId(0),
                count: COUNT_FLOOR,
                stats: vec![AttributeStats { mean: 0.0, std: SIGMA_FLOOR }],
            }],
            1,
            ModelTag::Raw,
        )
        .unwrap();
        let lp = log_posteriors(&m, &[1e3]).unwrap();
        assert!(lp[0].is_finite());
    }

    #[test]
    fn argmax_prefers_first_of_equals() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }
}
