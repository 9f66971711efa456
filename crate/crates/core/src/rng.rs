//! Reproducible random streams for synthetic data.
//!
//! Every trial draws from its own ChaCha8 stream: the key comes from
//! `SeedableRng::seed_from_u64(master_seed)` and the 64-bit stream id is the
//! trial index. Trials are therefore independent of execution order.
//!
//! Derived variates use fixed transforms so that datasets are bit-exact
//! across platforms:
//! - uniform in `[0, 1)`: the top 53 bits of `next_u64`, times `2^-53`;
//! - uniform in `(0, 1]`: `1 - uniform[0,1)`;
//! - standard normal: Box–Muller, `sqrt(-2 ln u1) * cos(2 pi u2)` then the
//!   `sin` partner on the next call (u1 in `(0, 1]`, u2 in `[0, 1)`);
//! - integer below `n`: `floor(uniform * n)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        Self {
            rng,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal by Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Uniform integer in `0..n`.
    pub fn index_below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// `k` distinct indices from `0..n` by a partial Fisher–Yates shuffle, in
    /// draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index_below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
