//! Seedable randomness shared by every stochastic operation.
//!
//! A [`RandomSource`] is a ChaCha8 generator keyed by a 64-bit seed and a
//! 64-bit stream id. Distinct `(seed, stream)` pairs give independent
//! sequences and the same pair always replays the same sequence. Parallel
//! fan-out derives children with [`RandomSource::substream`] so results do
//! not depend on scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    noise_draws: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            noise_draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child source number `id`. Depends only on this source's `(seed, stream)`,
    /// never on how much of it has been consumed.
    pub fn substream(&self, id: u64) -> RandomSource {
        let key =
            splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RandomSource::new(key, id)
    }

    /// Child source keyed by the next output of this one.
    pub fn fork(&mut self) -> RandomSource {
        let seed = self.rng.next_u64();
        RandomSource::new(seed, 0)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.rng);
    }

    /// Number of privacy-noise draws taken through this source.
    pub fn noise_draws(&self) -> u64 {
        self.noise_draws
    }

    pub(crate) fn privacy_noise(&mut self, sd: f64) -> f64 {
        self.noise_draws += 1;
        sd * self.standard_normal()
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

impl std::fmt::Debug for RandomSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RandomSource")
            .field("seed", &self.seed)
            .field("stream", &self.stream)
            .finish_non_exhaustive()
    }
}
