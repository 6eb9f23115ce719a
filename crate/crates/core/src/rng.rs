//! Counter-based streams: every draw is addressed by (seed, stream, index),
//! so results never depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finaliser.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replica `idx`. The master is mixed before the XOR so that nearby
/// masters do not share replica seeds (master ^ idx alone only permutes them).
pub fn replica_seed(master: u64, idx: u64) -> u64 {
    mix64(mix64(master) ^ idx)
}

/// Stream tags keep unrelated consumers of one seed apart.
pub mod tag {
    pub const NOISE: u64 = 1;
    pub const POTENTIAL: u64 = 2;
    pub const INCREMENT: u64 = 3;
    pub const GOE: u64 = 4;
    pub const BAND: u64 = 5;
    pub const MISC: u64 = 6;
}

/// Generator positioned at block `index` of stream `stream`. Each index owns
/// 2^32 words, far more than any single draw consumes.
pub fn counter_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.set_word_pos((index as u128) << 32);
    r
}

pub fn normal<R: Rng + ?Sized>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

/// Unit-variance, mean-zero scalar laws used for potentials and noise weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarDist {
    Gaussian,
    Rademacher,
    Uniform,
}

impl ScalarDist {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(Self::Gaussian),
            "rademacher" => Some(Self::Rademacher),
            "uniform" => Some(Self::Uniform),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Rademacher => "rademacher",
            Self::Uniform => "uniform",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, r: &mut R) -> f64 {
        match self {
            Self::Gaussian => normal(r),
            Self::Rademacher => {
                if r.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Uniform => 3f64.sqrt() * (2.0 * r.random::<f64>() - 1.0),
        }
    }

    /// E(x^4) for the unit-variance law.
    pub fn fourth_moment(&self) -> f64 {
        match self {
            Self::Gaussian => 3.0,
            Self::Rademacher => 1.0,
            Self::Uniform => 1.8,
        }
    }
}
