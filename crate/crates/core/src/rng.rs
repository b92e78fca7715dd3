//! Deterministic counter-based random streams.
//!
//! Each `(seed, stream_id)` pair maps to its own ChaCha8 stream, so parallel
//! workers draw from disjoint sequences that do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Number of independent chunks a Monte Carlo budget is split into. Fixed,
/// so results do not depend on how many threads run the chunks.
pub const MC_CHUNKS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A child stream, deterministic in `(self, index)`.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&splitmix64(self.seed).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Splits `n` items into `workers` contiguous chunk sizes.
pub fn chunk_sizes(n: u64, workers: usize) -> Vec<u64> {
    let w = workers.max(1) as u64;
    (0..w).map(|i| n / w + u64::from(i < n % w)).collect()
}

/// Runs `f(count, rng)` on each of the `MC_CHUNKS` chunks of an `n`-sample
/// budget, chunk `i` drawing from `rng.substream(i)`, and returns the
/// per-chunk results in chunk order.
pub fn par_chunks<T, F>(rng: &SeededRng, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    chunk_sizes(n, MC_CHUNKS)
        .into_par_iter()
        .enumerate()
        .map(|(i, m)| f(m, &mut rng.substream(i as u64).generator()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_draws() {
        let a: Vec<u64> = SeededRng::new(7, 3).generator().sample_iter(rand::distributions::Standard).take(16).collect();
        let b: Vec<u64> = SeededRng::new(7, 3).generator().sample_iter(rand::distributions::Standard).take(16).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ() {
        let mut a = SeededRng::new(7, 3).generator();
        let mut b = SeededRng::new(7, 4).generator();
        assert_ne!(a.gen::<u64>(), b.gen::<u64>());
        assert_ne!(SeededRng::new(1, 0).substream(0), SeededRng::new(1, 0).substream(1));
    }

    #[test]
    fn chunks_cover_n() {
        let c = chunk_sizes(10, 3);
        assert_eq!(c, vec![4, 3, 3]);
        assert_eq!(chunk_sizes(2, 4).iter().sum::<u64>(), 2);
    }

    #[test]
    fn par_chunks_is_deterministic() {
        let run = || {
            par_chunks(&SeededRng::new(5, 0), 1000, |m, g| (0..m).map(|_| g.gen::<u32>() as u64).sum::<u64>())
        };
        assert_eq!(run(), run());
        assert_eq!(run().len(), MC_CHUNKS);
    }
}
