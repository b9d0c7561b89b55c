//! Laplace mechanism primitives shared by data and model perturbation.
//!
//! A release `f(D) + Lap(Δf/ε)` is ε-differentially private when `Δf` bounds
//! the L1 change of `f` between neighbouring datasets. The types here keep the
//! three ingredients apart: [`PrivacyBudget`] (ε > 0), [`Sensitivity`]
//! (Δf ≥ 0) and the derived [`LaplaceScale`].

mod noise;

pub use noise::{
    derive_seed, ConstantNoise, Draw, NoiseSampler, NoiseSource, RecordingSampler, ScriptedNoise,
};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("privacy budget must be a finite positive number, got {0}")]
    InvalidBudget(f64),
    #[error("sensitivity must be finite and non-negative, got {0}")]
    InvalidSensitivity(f64),
    #[error("laplace scale must be finite and non-negative, got {0}")]
    InvalidScale(f64),
    #[error("degenerate distribution: laplace scale is zero")]
    DegenerateDistribution,
    #[error("non-finite value {value} at position {index}")]
    NonFiniteValue { index: usize, value: f64 },
}

/// Privacy parameter ε, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PrivacyBudget(f64);

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self, DpError> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(Self(epsilon))
        } else {
            Err(DpError::InvalidBudget(epsilon))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PrivacyBudget {
    type Error = DpError;
    fn try_from(v: f64) -> Result<Self, DpError> {
        Self::new(v)
    }
}

impl From<PrivacyBudget> for f64 {
    fn from(b: PrivacyBudget) -> f64 {
        b.0
    }
}

impl fmt::Display for PrivacyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ε={}", self.0)
    }
}

/// L1 sensitivity Δf of a query, in the units of the released quantity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Sensitivity(f64);

impl Sensitivity {
    pub fn new(delta_f: f64) -> Result<Self, DpError> {
        if delta_f.is_finite() && delta_f >= 0.0 {
            Ok(Self(delta_f))
        } else {
            Err(DpError::InvalidSensitivity(delta_f))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

/// Laplace scale parameter b. Zero is representable so that a zero-sensitivity
/// query has a well-defined scale; sampling code treats it as "no noise".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(scale: f64) -> Result<Self, DpError> {
        if scale.is_finite() && scale >= 0.0 {
            Ok(Self(scale))
        } else {
            Err(DpError::InvalidScale(scale))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

/// `Δf / ε`.
pub fn laplace_scale(sensitivity: Sensitivity, budget: PrivacyBudget) -> LaplaceScale {
    LaplaceScale(sensitivity.0 / budget.0)
}

/// Density of the centered Laplace distribution, `exp(-|x|/b) / 2b`.
pub fn laplace_density(x: f64, scale: LaplaceScale) -> Result<f64, DpError> {
    if scale.is_zero() {
        return Err(DpError::DegenerateDistribution);
    }
    let b = scale.0;
    Ok((-x.abs() / b).exp() / (2.0 * b))
}

/// Inverse CDF of Laplace(0, b) parameterised by `u` on (-1/2, 1/2):
/// `-b · sign(u) · ln(1 - 2|u|)`.
pub fn laplace_inverse_cdf(u: f64, scale: LaplaceScale) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale.0 * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One draw from Laplace(0, `scale`), advancing `source`.
pub fn sample_laplace<S: NoiseSampler + ?Sized>(scale: LaplaceScale, source: &mut S) -> f64 {
    source.laplace(scale)
}

/// Adds an independent Laplace draw to every component.
///
/// A zero scale is rejected: callers with Δf = 0 release the value unchanged
/// and must not reach this function.
pub fn perturb_vector<S: NoiseSampler + ?Sized>(
    values: &[f64],
    scale: LaplaceScale,
    source: &mut S,
) -> Result<Vec<f64>, DpError> {
    if scale.is_zero() {
        return Err(DpError::DegenerateDistribution);
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(DpError::NonFiniteValue { index, value });
    }
    Ok(values.iter().map(|v| v + source.laplace(scale)).collect())
}

/// Largest binned log-likelihood ratio between two sets of mechanism outputs.
///
/// Outputs are histogrammed over `[lo, hi)` in `bins` equal-width bins; only
/// bins where both histograms hold at least `min_count` samples take part.
/// For an ε-DP mechanism the result converges to at most ε.
pub fn binned_privacy_loss(
    outputs_a: &[f64],
    outputs_b: &[f64],
    lo: f64,
    hi: f64,
    bins: usize,
    min_count: u64,
) -> Option<f64> {
    let hist = |xs: &[f64]| {
        let mut h = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &x in xs {
            if x >= lo && x < hi {
                let i = (((x - lo) / width) as usize).min(bins - 1);
                h[i] += 1;
            }
        }
        h
    };
    let ha = hist(outputs_a);
    let hb = hist(outputs_b);
    let (na, nb) = (outputs_a.len() as f64, outputs_b.len() as f64);
    ha.iter()
        .zip(&hb)
        .filter(|(&a, &b)| a >= min_count && b >= min_count)
        .map(|(&a, &b)| {
            let pa = a as f64 / na;
            let pb = b as f64 / nb;
            (pa / pb).ln().abs()
        })
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |m| m.max(r))))
}
