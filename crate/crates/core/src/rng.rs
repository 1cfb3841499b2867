//! Seeded random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream. Equal `(seed, stream)` pairs replay the same
/// sequence on every platform.
#[derive(Debug, Clone)]
pub struct RandomSource(ChaCha8Rng);

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `stream` derived from `seed`, used to give each
    /// sampling method or worker its own generator.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSource(rng)
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// Uniform integer in `0..n` by rejection from a full 64-bit word.
///
/// Panics if `n == 0`.
#[inline]
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "empty range");
    // 2^64 mod n; the top `rem` words would bias the low residues
    let rem = (u64::MAX % n + 1) % n;
    loop {
        let x = rng.next_u64();
        if rem == 0 || x <= u64::MAX - rem {
            return x % n;
        }
    }
}

/// Uniform `f64` in `[0, 1)`.
#[inline]
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RandomSource::new(7);
        let mut b = RandomSource::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = RandomSource::with_stream(7, 1);
        let mut d = RandomSource::with_stream(7, 2);
        assert_ne!(c.next_u64(), d.next_u64());
    }

    #[test]
    fn uniform_below_hits_every_value() {
        let mut rng = RandomSource::new(1);
        let mut seen = [0u32; 6];
        for _ in 0..60_000 {
            seen[uniform_below(&mut rng, 6) as usize] += 1;
        }
        for s in seen {
            assert!((9_000..11_000).contains(&s), "{seen:?}");
        }
        for _ in 0..1000 {
            assert_eq!(uniform_below(&mut rng, 1), 0);
            assert!(uniform_below(&mut rng, u64::MAX) < u64::MAX);
        }
    }
}
