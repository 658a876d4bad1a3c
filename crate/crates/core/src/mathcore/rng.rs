use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded random stream shared by every stochastic routine in the crate.
///
/// Backed by ChaCha8 (`rand_chacha` 0.9) seeded through `seed_from_u64`;
/// normals come from `rand_distr::StandardNormal`. Both are portable, so a
/// seed reproduces the same stream on every platform for a fixed lockfile.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

/// Version tag of the generator recipe above; bump when it changes.
pub const RNG_ALGORITHM: &str = "chacha8-v1";

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for trial `index`, seeded with `seed ⊕ index`.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        SeededRng::new(seed ^ index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// ±1 with probability ½ each.
    pub fn spin(&mut self) -> f64 {
        if self.inner.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// `n` fair ±1 entries, 64 per generator word.
    pub fn spins(&mut self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut bits = self.inner.random::<u64>();
            for _ in 0..(n - out.len()).min(64) {
                out.push(if bits & 1 == 1 { 1.0 } else { -1.0 });
                bits >>= 1;
            }
        }
        out
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}
