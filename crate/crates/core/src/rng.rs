//! Seeded, splittable random streams.
//!
//! A stream is addressed by `(master_seed, stream_index)`. The master seed
//! keys a ChaCha8 generator and the index selects its 64-bit stream nonce, so
//! any stream can be opened in O(1) without touching the others. Trial `i` of
//! a batch always reads stream `i`, whatever the worker count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        RngStream {
            master_seed,
            stream_index,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform symbol in `0..m`.
    ///
    /// Uses the widening-multiply rejection method over the full 64-bit output,
    /// so there is no modulo bias. `m = 0` is treated as `m = 1`.
    #[inline]
    pub fn next_symbol(&mut self, m: u64) -> u64 {
        if m <= 1 {
            return 0;
        }
        self.inner.random_range(0..m)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        // 53-bit grid shifted by half a step: never 0, never 1.
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Infinite iterator of symbols in `0..m`.
    pub fn symbols(&mut self, m: u64) -> impl Iterator<Item = u64> + '_ {
        std::iter::repeat_with(move || self.next_symbol(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_alphabet_is_constant() {
        let mut s = RngStream::new(1, 2);
        assert!((0..1000).all(|_| s.next_symbol(1) == 0));
    }

    #[test]
    fn same_address_same_sequence() {
        let a: Vec<u64> = RngStream::new(99, 5).symbols(1000).take(1000).collect();
        let b: Vec<u64> = RngStream::new(99, 5).symbols(1000).take(1000).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = RngStream::new(99, 6).symbols(1000).take(1000).collect();
        assert_ne!(a, c);
        let d: Vec<u64> = RngStream::new(98, 5).symbols(1000).take(1000).collect();
        assert_ne!(a, d);
    }

    #[test]
    fn open_unit_interval() {
        let mut s = RngStream::new(0, 0);
        for _ in 0..100_000 {
            let u = s.next_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn die_frequencies_within_five_sigma() {
        let n = 6_000_000u64;
        let mut counts = [0u64; 6];
        let mut s = RngStream::new(2024, 0);
        for _ in 0..n {
            counts[s.next_symbol(6) as usize] += 1;
        }
        let expect = n as f64 / 6.0;
        let sigma = (n as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - expect).abs() < 5.0 * sigma,
                "count {c} vs {expect} (sigma {sigma})"
            );
        }
    }
}
