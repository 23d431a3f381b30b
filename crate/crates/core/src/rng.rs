//! Counter-based, splittable random number generation.
//!
//! Every draw is a pure function of `(key, counter)`, so a simulation can hand
//! each trial its own stream via [`CounterRng::split`] and get the same numbers
//! no matter how trials are scheduled across threads.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1334_11EB);
    z ^ (z >> 31)
}

/// Stateless-per-draw generator: output `i` is `mix64(key + (i + 1) * gamma)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x6A09_E667_F3BC_C909),
            counter: 0,
        }
    }

    /// Independent child stream identified by `stream`. Splitting does not
    /// advance the parent.
    pub fn split(&self, stream: u64) -> Self {
        let key = mix64(self.key ^ mix64(stream.wrapping_add(GOLDEN_GAMMA)));
        Self {
            key: mix64(key.wrapping_add(0xBB67_AE85_84CA_A73B)),
            counter: 0,
        }
    }

    /// Value at an arbitrary position of this stream without touching the cursor.
    pub fn at(&self, index: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        const DEN: f64 = (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 / DEN
    }

    /// Uniform in `(0, 1]`, safe to feed into `ln`.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire's widening multiply, unbiased).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            let low = m as u64;
            if low >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn normal(&mut self) -> f64 {
        use rand_distr::Distribution;
        rand_distr::StandardNormal.sample(self)
    }

    /// Draw from a flat Dirichlet over `q` outcomes.
    pub fn flat_dirichlet(&mut self, q: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..q).map(|_| -self.uniform_open0().ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        w
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
