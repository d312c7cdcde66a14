//! Seeded random streams.
//!
//! Every stochastic quantity in the crate is drawn from a PCG-XSL-RR 128/64
//! generator (`Pcg64`), seeded through `SeedableRng::seed_from_u64`, and
//! Gaussian variates come from `rand_distr::StandardNormal`. A stream is fully
//! determined by its 64-bit seed.

use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives the seed of one Monte-Carlo trial:
/// `splitmix64(master ^ splitmix64(trial ^ splitmix64(row)))`.
///
/// Sweeps pass `row = 0` for every row so that all rows see the same noise
/// realisations while trials differ.
pub fn trial_seed(master: u64, trial: u64, row: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial ^ splitmix64(row)))
}

/// Derives an independent sub-stream seed (e.g. shot noise next to thermal noise).
pub fn substream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0xA5A5_A5A5_A5A5_A5A5)))
}

/// Standard-normal variates from a seeded `Pcg64`.
pub struct GaussianStream {
    rng: Pcg64,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Pcg64::seed_from_u64(seed),
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Fills a vector with `n` zero-mean Gaussian samples of standard deviation `sigma`.
    pub fn samples(&mut self, sigma: f64, n: usize) -> Vec<f64> {
        (0..n).map(|_| sigma * self.next_standard()).collect()
    }
}
