//! Seedable noise generation.
//!
//! Every draw in the crate goes through a [`NoiseSampler`]. The production
//! sampler is [`NoiseSource`], a ChaCha20 stream keyed by a 64-bit seed;
//! tests substitute [`ConstantNoise`], [`ScriptedNoise`] or wrap a sampler in
//! [`RecordingSampler`] to inspect the scales that were requested.

use std::collections::VecDeque;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::{laplace_inverse_cdf, LaplaceScale};

/// Source of centered Laplace draws.
pub trait NoiseSampler {
    /// One draw from Laplace(0, `scale`).
    fn laplace(&mut self, scale: LaplaceScale) -> f64;
}

impl<S: NoiseSampler + ?Sized> NoiseSampler for &mut S {
    fn laplace(&mut self, scale: LaplaceScale) -> f64 {
        (**self).laplace(scale)
    }
}

impl<S: NoiseSampler + ?Sized> NoiseSampler for Box<S> {
    fn laplace(&mut self, scale: LaplaceScale) -> f64 {
        (**self).laplace(scale)
    }
}

/// Derive a 64-bit seed from a parent seed and a sequence of labels.
///
/// The derivation is SHA-256 over the little-endian parent seed followed by
/// each part prefixed with its length, truncated to the first eight bytes.
pub fn derive_seed(parent: u64, parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Deterministic generator: identical seed, identical sequence.
///
/// Single-owner mutable state. It is `Send` so a cell can move it to a worker
/// thread, but it is never shared.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    rng: ChaCha20Rng,
}

impl NoiseSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent sub-stream keyed by `(label, index)`.
    ///
    /// Depends only on this source's seed, never on how many values have
    /// already been drawn from it.
    pub fn substream(&self, label: &str, index: u64) -> NoiseSource {
        NoiseSource::from_seed(derive_seed(
            self.seed,
            &[label.as_bytes(), &index.to_le_bytes()],
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on the open interval (-1/2, 1/2).
    ///
    /// Uses 52 random bits, k in [0, 2^52), mapped to (k + 1/2) / 2^52 - 1/2.
    /// Every step is exact in binary64, so neither endpoint nor zero is ever
    /// produced.
    pub fn uniform_centered(&mut self) -> f64 {
        let k = self.rng.next_u64() >> 12;
        (k as f64 + 0.5) * (1.0 / (1u64 << 52) as f64) - 0.5
    }

    /// Mutable access to the generator for shuffling and similar uses.
    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

impl NoiseSampler for NoiseSource {
    fn laplace(&mut self, scale: LaplaceScale) -> f64 {
        let u = self.uniform_centered();
        laplace_inverse_cdf(u, scale)
    }
}

/// Returns the same value for every draw, whatever the scale.
///
/// Used to replay published noise values.
#[derive(Debug, Clone, Copy)]
pub struct ConstantNoise(pub f64);

impl NoiseSampler for ConstantNoise {
    fn laplace(&mut self, _scale: LaplaceScale) -> f64 {
        self.0
    }
}

/// Returns queued values in order, then zeros.
#[derive(Debug, Clone, Default)]
pub struct ScriptedNoise {
    queue: VecDeque<f64>,
}

impl ScriptedNoise {
    pub fn new(values: impl IntoIterator<Item = f64>) -> Self {
        Self {
            queue: values.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl NoiseSampler for ScriptedNoise {
    fn laplace(&mut self, _scale: LaplaceScale) -> f64 {
        self.queue.pop_front().unwrap_or(0.0)
    }
}

/// One recorded draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub scale: f64,
    pub value: f64,
}

/// Wraps a sampler and records every `(scale, value)` pair it hands out.
#[derive(Debug, Clone)]
pub struct RecordingSampler<S> {
    inner: S,
    draws: Vec<Draw>,
}

impl<S: NoiseSampler> RecordingSampler<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            draws: Vec::new(),
        }
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }

    pub fn into_parts(self) -> (S, Vec<Draw>) {
        (self.inner, self.draws)
    }
}

impl<S: NoiseSampler> NoiseSampler for RecordingSampler<S> {
    fn laplace(&mut self, scale: LaplaceScale) -> f64 {
        let value = self.inner.laplace(scale);
        self.draws.push(Draw {
            scale: scale.value(),
            value,
        });
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = NoiseSource::from_seed(7);
        let mut b = NoiseSource::from_seed(7);
        let scale = LaplaceScale::new(1.5).unwrap();
        for _ in 0..1000 {
            assert_eq!(a.laplace(scale).to_bits(), b.laplace(scale).to_bits());
        }
    }

    #[test]
    fn substreams_ignore_parent_position() {
        let mut parent = NoiseSource::from_seed(11);
        let before = parent.substream("owner", 3);
        parent.next_u64();
        let after = parent.substream("owner", 3);
        assert_eq!(before.seed(), after.seed());
        assert_ne!(
            parent.substream("owner", 3).seed(),
            parent.substream("owner", 4).seed()
        );
        assert_ne!(
            parent.substream("owner", 3).seed(),
            parent.substream("classifier", 3).seed()
        );
    }

    #[test]
    fn uniform_stays_inside_open_interval() {
        let mut src = NoiseSource::from_seed(0);
        for _ in 0..100_000 {
            let u = src.uniform_centered();
            assert!(u > -0.5 && u < 0.5 && u != 0.0);
        }
    }

    #[test]
    fn recording_sampler_keeps_scale_and_value() {
        let mut rec = RecordingSampler::new(ConstantNoise(0.25));
        let s = LaplaceScale::new(3.0).unwrap();
        assert_eq!(rec.laplace(s), 0.25);
        assert_eq!(
            rec.draws(),
            &[Draw {
                scale: 3.0,
                value: 0.25
            }]
        );
    }

    #[test]
    fn scripted_noise_drains_then_zero() {
        let mut s = ScriptedNoise::new([1.0, -2.0]);
        let scale = LaplaceScale::new(1.0).unwrap();
        assert_eq!(s.laplace(scale), 1.0);
        assert_eq!(s.laplace(scale), -2.0);
        assert_eq!(s.laplace(scale), 0.0);
    }
}
