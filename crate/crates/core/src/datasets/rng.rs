use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded deterministic random stream.
#[derive(Clone, Debug)]
pub struct Rng(ChaCha8Rng);

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Stream for item `index` of a collection seeded with `seed`.
    pub fn derived(seed: u64, index: u64) -> Self {
        Self::new(splitmix64(seed ^ splitmix64(index)))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    /// Uniform on `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn int_in(&mut self, lo: i64, hi_exclusive: i64) -> i64 {
        self.0.gen_range(lo..hi_exclusive)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.gen()
    }

    /// Two distinct values drawn uniformly from `0..n` (`n >= 2`).
    pub fn distinct_pair(&mut self, n: usize) -> (usize, usize) {
        let a = self.below(n);
        let mut b = self.below(n - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
