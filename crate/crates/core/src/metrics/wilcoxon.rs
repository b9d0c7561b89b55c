//! Two-sided Wilcoxon signed-rank test.
//!
//! Zero differences are dropped and tied absolute differences share their
//! average rank. Up to [`EXACT_LIMIT`] remaining pairs the p-value comes from
//! the exact null distribution over all sign assignments of the (possibly
//! tied) ranks. Beyond that it uses the normal approximation with the tie
//! correction to the variance and no continuity correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::rank::average_ranks;
use super::MetricsError;

/// Largest effective sample size tested exactly.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

/// Decision on the null hypothesis of no difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(W+, W-).
    pub statistic: f64,
    pub w_plus: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: WilcoxonMethod,
    pub alpha: f64,
    /// `Rejected` exactly when `p_value < alpha`.
    pub verdict: Verdict,
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<WilcoxonResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            predicted: a.len(),
            actual: b.len(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::InvalidAlpha(alpha));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < 3 {
        return Err(MetricsError::InsufficientPairs(n));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);

    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), WilcoxonMethod::Exact)
    } else {
        (
            normal_p(&abs, &ranks, w_plus, Continuity::None),
            WilcoxonMethod::Normal,
        )
    };
    let p_value = p_value.clamp(0.0, 1.0);
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        p_value,
        n_effective: n,
        method,
        alpha,
        verdict: if p_value < alpha {
            Verdict::Rejected
        } else {
            Verdict::Accepted
        },
    })
}

/// Exact two-sided p over the 2^n sign patterns.
///
/// Average ranks are multiples of 1/2, so doubled ranks are integers and the
/// null distribution of doubled W+ is a subset-sum count.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = (w_plus * 2.0).round() as i64;
    let center = total as i64;
    let extreme = (2 * observed - center).abs();
    let hits: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - center).abs() >= extreme)
        .map(|(_, c)| c)
        .sum();
    hits as f64 / (1u64 << ranks.len()) as f64
}

/// Continuity adjustment for the large-sample approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    /// Used by [`wilcoxon_signed_rank`] above [`EXACT_LIMIT`].
    None,
    /// Shrinks |W+ − mean| by one half.
    Half,
}

/// Two-sided normal-approximation p-value at any sample size, with the same
/// zero handling and tie correction as [`wilcoxon_signed_rank`].
pub fn normal_approximation(a: &[f64], b: &[f64], continuity: Continuity) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            predicted: a.len(),
            actual: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.len() < 3 {
        return Err(MetricsError::InsufficientPairs(diffs.len()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    Ok(normal_p(&abs, &ranks, w_plus, continuity).clamp(0.0, 1.0))
}

fn normal_p(abs: &[f64], ranks: &[f64], w_plus: f64, continuity: Continuity) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let shrink = match continuity {
        Continuity::None => 0.0,
        Continuity::Half => 0.5,
    };
    let z = ((w_plus - mean).abs() - shrink).max(0.0) / var.sqrt();
    2.0 * (1.0 - Normal::standard().cdf(z))
}
