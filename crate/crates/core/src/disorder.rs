//! Counter-based quenched disorder: every value is a pure function of
//! (seed, location), so shifted and nested environments agree exactly.

use crate::lattice::{Bond, Site};
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a seed, a stream tag and a list of integer words.
#[inline]
pub fn hash_words(seed: u64, stream: u64, words: &[i64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    h = mix64(h ^ stream.wrapping_mul(GOLDEN));
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ (w as u64));
    }
    h
}

/// Derive an independent child seed, e.g. per realization index.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    hash_words(master, tag, &[index as i64])
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn unit_open(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal from two hashes (Box–Muller, cosine branch).
#[inline]
pub fn normal_from(h1: u64, h2: u64) -> f64 {
    let u1 = unit_open(h1);
    let u2 = unit_open(h2);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

const STREAM_SITE: u64 = 1;
const STREAM_SITE_AUX: u64 = 2;
const STREAM_COND: u64 = 3;
const STREAM_EPS: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SiteDistribution {
    Gaussian { mean: f64, variance: f64 },
    /// m ± 1 with probability ½ each.
    RademacherShifted { mean: f64 },
    Uniform { lo: f64, hi: f64 },
    /// ξ ≡ value; not random, used for baselines.
    Constant { value: f64 },
}

impl SiteDistribution {
    pub fn standard_gaussian() -> Self {
        SiteDistribution::Gaussian { mean: 0.0, variance: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SiteDistribution::Gaussian { mean, .. } => mean,
            SiteDistribution::RademacherShifted { mean } => mean,
            SiteDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            SiteDistribution::Constant { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            SiteDistribution::Gaussian { variance, .. } => variance,
            SiteDistribution::RademacherShifted { .. } => 1.0,
            SiteDistribution::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            SiteDistribution::Constant { .. } => 0.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        self.variance() + self.mean().powi(2)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            SiteDistribution::Gaussian { mean, variance } => {
                0.5 * statrs::function::erf::erfc(-(x - mean) / (2.0 * variance).sqrt())
            }
            SiteDistribution::RademacherShifted { mean } => {
                if x < mean - 1.0 {
                    0.0
                } else if x < mean + 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            SiteDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            SiteDistribution::Constant { value } => {
                if x < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    fn sample(&self, h1: u64, h2: u64) -> f64 {
        match *self {
            SiteDistribution::Gaussian { mean, variance } => mean + variance.sqrt() * normal_from(h1, h2),
            SiteDistribution::RademacherShifted { mean } => {
                if h1 >> 63 == 0 {
                    mean - 1.0
                } else {
                    mean + 1.0
                }
            }
            SiteDistribution::Uniform { lo, hi } => lo + (hi - lo) * unit_open(h1),
            SiteDistribution::Constant { value } => value,
        }
    }
}

/// Site field ξ on all of Z^d. `offset` realises τ_v: the shifted field
/// evaluates the base field at s − offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteDisorder {
    pub dist: SiteDistribution,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Site>,
}

impl SiteDisorder {
    pub fn new(dist: SiteDistribution, seed: u64) -> Self {
        SiteDisorder { dist, seed, offset: None }
    }

    pub fn zero() -> Self {
        SiteDisorder::new(SiteDistribution::Constant { value: 0.0 }, 0)
    }

    /// τ_v ξ, composing with any existing shift.
    pub fn shifted(&self, v: &Site) -> Self {
        let offset = match self.offset {
            Some(o) => o.add(v),
            None => *v,
        };
        SiteDisorder { offset: Some(offset), ..*self }
    }

    pub fn xi_at(&self, site: &Site) -> f64 {
        let s = match &self.offset {
            Some(o) => site.sub(o),
            None => *site,
        };
        let h1 = hash_words(self.seed, STREAM_SITE, s.coords());
        let h2 = hash_words(self.seed, STREAM_SITE_AUX, s.coords());
        self.dist.sample(h1, h2)
    }

    pub fn values(&self, sites: impl Iterator<Item = Site>) -> Vec<f64> {
        sites.map(|s| self.xi_at(&s)).collect()
    }
}

/// Bond environment for random-conductance models: c_b ~ U[c_min, c_max],
/// ε_b ~ U[0, eps_max] (ε_b ≡ 0 when eps_max = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondDisorder {
    pub c_min: f64,
    pub c_max: f64,
    #[serde(default)]
    pub eps_max: f64,
    pub seed: u64,
}

/// Constants (A, B, C₂) with A s² − B ≤ V_b(s) ≤ C₂ s² for every bond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub a: f64,
    pub b: f64,
    pub c2: f64,
}

impl BondDisorder {
    pub fn new(c_min: f64, c_max: f64, eps_max: f64, seed: u64) -> Self {
        assert!(0.0 < c_min && c_min <= c_max, "need 0 < c_min <= c_max");
        assert!(eps_max >= 0.0, "eps_max must be nonnegative");
        BondDisorder { c_min, c_max, eps_max, seed }
    }

    pub fn constant(c: f64) -> Self {
        BondDisorder::new(c, c, 0.0, 0)
    }

    /// (c_b, ε_b), identical for a bond and its reversal.
    pub fn omega_at(&self, bond: &Bond) -> (f64, f64) {
        let (key, _) = bond.canonical();
        let d = key.from.dim();
        let mut words = [0i64; crate::lattice::MAX_DIM + 1];
        words[..d].copy_from_slice(key.from.coords());
        words[d] = key.axis() as i64;
        let w = &words[..d + 1];
        let c = if self.c_max > self.c_min {
            self.c_min + (self.c_max - self.c_min) * unit_open(hash_words(self.seed, STREAM_COND, w))
        } else {
            self.c_min
        };
        let eps = if self.eps_max > 0.0 {
            self.eps_max * unit_open(hash_words(self.seed, STREAM_EPS, w))
        } else {
            0.0
        };
        (c, eps)
    }

    /// Envelope for V_b(s) = c_b s² + ε_b (cos s − 1). Lower: cos s − 1 ≥ −2.
    /// Upper: cos s − 1 ≤ 0.
    pub fn envelope(&self) -> Envelope {
        Envelope { a: self.c_min, b: 2.0 * self.eps_max, c2: self.c_max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxRegion;

    #[test]
    fn deterministic_and_shift_consistent() {
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), 42);
        let s = Site::new(&[3, -1, 7]);
        assert_eq!(xi.xi_at(&s), xi.xi_at(&s));
        let v = Site::new(&[1, 2, -3]);
        assert_eq!(xi.shifted(&v).xi_at(&s), xi.xi_at(&s.sub(&v)));
        assert_eq!(xi.shifted(&v).shifted(&v.neg()).xi_at(&s), xi.xi_at(&s));
        assert_ne!(xi.xi_at(&s), SiteDisorder::new(SiteDistribution::standard_gaussian(), 43).xi_at(&s));
    }

    #[test]
    fn rademacher_mean() {
        let xi = SiteDisorder::new(SiteDistribution::RademacherShifted { mean: 1.0 }, 7);
        let region = BoxRegion::with_extents(&[0, 0], &[1000, 1000]).unwrap();
        let vals = xi.values(region.sites());
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 1.0).abs() < 0.005, "{mean}");
        assert!(vals.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn gaussian_moments() {
        let xi = SiteDisorder::new(SiteDistribution::Gaussian { mean: 0.5, variance: 2.0 }, 11);
        let region = BoxRegion::with_extents(&[0, 0], &[1000, 1000]).unwrap();
        let vals = xi.values(region.sites());
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 0.5).abs() < 5.0 * (2.0 / n).sqrt());
        // Var of the sample variance is 2σ⁴/n for Gaussians.
        assert!((var - 2.0).abs() < 5.0 * (8.0 / n).sqrt());
    }

    #[test]
    fn conductance_mean_and_symmetry() {
        let omega = BondDisorder::new(1.0, 2.0, 0.0, 5);
        let region = BoxRegion::with_extents(&[0, 0], &[1000, 500]).unwrap();
        let mut sum = 0.0;
        let mut n = 0.0;
        for s in region.sites() {
            for ax in 0..2 {
                let b = Bond::along(s, ax);
                let (c, e) = omega.omega_at(&b);
                assert_eq!(omega.omega_at(&b.reversed()), (c, e));
                assert!((1.0..=2.0).contains(&c));
                assert_eq!(e, 0.0);
                sum += c;
                n += 1.0;
            }
        }
        assert!((sum / n - 1.5).abs() < 0.002);
        let flat = BondDisorder::constant(0.7);
        assert_eq!(flat.omega_at(&Bond::along(Site::new(&[4, 4]), 1)), (0.7, 0.0));
    }
}
