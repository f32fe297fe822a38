//! Seeded, hierarchically splittable random streams.
//!
//! A stream is identified by a 64-bit seed and a path of split keys, e.g.
//! `experiment -> function -> instance -> run -> role`. The generator state of
//! a stream depends only on that identity, never on how much randomness a
//! sibling or parent has consumed, so parallel schedules reproduce sequential
//! results bit for bit.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a; used to turn identifiers into split keys.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn str_key(s: &str) -> u64 {
    fnv1a(s.as_bytes())
}

/// Fold a seed and a path of keys into one 64-bit key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed), |acc, &k| mix64(acc ^ mix64(k)))
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_path(seed, Vec::new())
    }

    pub fn with_path(seed: u64, path: Vec<u64>) -> Self {
        let mut key = derive_key(seed, &path);
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_mut(8) {
            key = mix64(key);
            chunk.copy_from_slice(&key.to_le_bytes());
        }
        Self { seed, path, inner: ChaCha8Rng::from_seed(bytes) }
    }

    /// Child stream at `path ++ [key]`, independent of this stream's position.
    pub fn split(&self, key: u64) -> Self {
        let mut path = self.path.clone();
        path.push(key);
        Self::with_path(self.seed, path)
    }

    pub fn split_str(&self, key: &str) -> Self {
        self.split(str_key(key))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn unit(&mut self) -> f64 {
        self.random::<f64>()
    }

    pub fn draw(&mut self, dist: &Dist) -> f64 {
        dist.sample(self)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Distributions the optimisers and corrections draw from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dist {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
    Cauchy { location: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl Dist {
    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if low.is_finite() && high.is_finite() && high > low {
            Ok(Dist::Uniform { low, high })
        } else {
            Err(Error::InvalidDistribution(format!("uniform needs low < high, got [{low}, {high}]")))
        }
    }

    pub fn normal(mean: f64, std_dev: f64) -> Result<Self> {
        if mean.is_finite() && std_dev.is_finite() && std_dev > 0.0 {
            Ok(Dist::Normal { mean, std_dev })
        } else {
            Err(Error::InvalidDistribution(format!("normal needs std_dev > 0, got {std_dev}")))
        }
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        if location.is_finite() && scale.is_finite() && scale > 0.0 {
            Ok(Dist::Cauchy { location, scale })
        } else {
            Err(Error::InvalidDistribution(format!("cauchy needs scale > 0, got {scale}")))
        }
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 {
            Ok(Dist::Beta { alpha, beta })
        } else {
            Err(Error::InvalidDistribution(format!(
                "beta needs alpha > 0 and beta > 0, got ({alpha}, {beta})"
            )))
        }
    }

    /// Quantile function for the distributions sampled by inversion.
    ///
    /// `None` for normal and beta, which use dedicated samplers.
    pub fn inverse_cdf(&self, u: f64) -> Option<f64> {
        match *self {
            Dist::Uniform { low, high } => Some(low + (high - low) * u),
            Dist::Cauchy { location, scale } => {
                Some(location + scale * (std::f64::consts::PI * (u - 0.5)).tan())
            }
            Dist::Normal { .. } | Dist::Beta { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Uniform { .. } | Dist::Cauchy { .. } => {
                let u: f64 = rng.random();
                self.inverse_cdf(u).expect("invertible")
            }
            Dist::Normal { mean, std_dev } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std_dev * z
            }
            // Cheng's rejection samplers: exact, not a moment approximation.
            Dist::Beta { alpha, beta } => Beta::new(alpha, beta).expect("validated").sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_uniform(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / n;
                let hi = (i + 1) as f64 / n;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn same_identity_same_draws() {
        let mut a = RngStream::with_path(7, vec![1, 2, 3]);
        let mut b = RngStream::new(7).split(1).split(2).split(3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn split_ignores_parent_position() {
        let parent = RngStream::new(11);
        let mut advanced = parent.clone();
        for _ in 0..17 {
            advanced.next_u64();
        }
        let mut c1 = parent.split(5);
        let mut c2 = advanced.split(5);
        assert_eq!(c1.next_u64(), c2.next_u64());
        assert_ne!(parent.split(5).next_u64(), parent.split(6).next_u64());
    }

    #[test]
    fn uniform_maps_unit_draw_linearly() {
        let d = Dist::uniform(-5.0, 5.0).unwrap();
        assert_eq!(d.inverse_cdf(0.25), Some(-2.5));
    }

    #[test]
    fn invalid_parameters_rejected() {
        for r in [
            Dist::uniform(1.0, 1.0),
            Dist::normal(0.0, 0.0),
            Dist::cauchy(0.0, -1.0),
            Dist::beta(0.0, 1.0),
            Dist::beta(1.0, f64::NAN),
        ] {
            let e = r.unwrap_err();
            assert!(e.to_string().starts_with("invalid distribution parameters"), "{e}");
        }
    }

    #[test]
    fn beta_one_one_is_uniform() {
        let mut s = RngStream::new(2024);
        let d = Dist::beta(1.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| s.draw(&d)).collect();
        let ks = ks_uniform(xs);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn cauchy_median_is_location() {
        let mut s = RngStream::new(99);
        let d = Dist::cauchy(0.5, 0.1).unwrap();
        let mut xs: Vec<f64> = (0..100_000).map(|_| s.draw(&d)).collect();
        xs.sort_by(f64::total_cmp);
        let median = 0.5 * (xs[49_999] + xs[50_000]);
        assert!((median - 0.5).abs() < 0.01, "median {median}");
    }

    #[test]
    fn normal_moments() {
        let mut s = RngStream::new(3);
        let d = Dist::normal(2.0, 0.5).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| s.draw(&d)).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((m - 2.0).abs() < 0.01);
        assert!((v - 0.25).abs() < 0.01);
    }
}
