//! Synthetic arrival traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::InferenceTrace;

/// Two models whose bursts alternate: while one is in its high phase the other
/// sits at its low rate.
#[derive(Clone, Debug)]
pub struct BurstyPair {
    pub seconds: usize,
    /// Length of one high phase in seconds; a full cycle is twice this.
    pub phase: usize,
    /// Shifts the phase pattern earlier by this many seconds.
    pub offset: usize,
    pub high: [u64; 2],
    pub low: [u64; 2],
    /// Uniform noise in `[0, jitter]` added to every count.
    pub jitter: u64,
    pub seed: u64,
}

impl BurstyPair {
    pub fn generate(&self) -> InferenceTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut counts = vec![Vec::with_capacity(self.seconds), Vec::with_capacity(self.seconds)];
        for s in 0..self.seconds {
            let first_high = ((s + self.offset) / self.phase.max(1)) % 2 == 1;
            for (m, series) in counts.iter_mut().enumerate() {
                let high = (m == 0) == first_high;
                let base = if high { self.high[m] } else { self.low[m] };
                let noise = if self.jitter > 0 { rng.random_range(0..=self.jitter) } else { 0 };
                series.push(base + noise);
            }
        }
        InferenceTrace::new(counts)
    }
}

/// Independent uniform counts in `[lo, hi]` per model and second.
pub fn uniform(models: usize, seconds: usize, lo: u64, hi: u64, seed: u64) -> InferenceTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts =
        (0..models).map(|_| (0..seconds).map(|_| rng.random_range(lo..=hi)).collect()).collect();
    InferenceTrace::new(counts)
}

/// Repeats one window's pattern `windows` times.
pub fn periodic(pattern: &[Vec<u64>], windows: usize) -> InferenceTrace {
    InferenceTrace::new(pattern.iter().map(|p| p.iter().copied().cycle().take(p.len() * windows).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bursty_pair_alternates() {
        let t = BurstyPair { seconds: 40, phase: 10, offset: 0, high: [50, 60], low: [5, 6], jitter: 0, seed: 1 }
            .generate();
        assert_eq!(t.counts[0][0], 5);
        assert_eq!(t.counts[1][0], 60);
        assert_eq!(t.counts[0][10], 50);
        assert_eq!(t.counts[1][10], 6);
        for s in 0..40 {
            let a_high = t.counts[0][s] == 50;
            let b_high = t.counts[1][s] == 60;
            assert_ne!(a_high, b_high, "second {s}");
        }
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(uniform(2, 50, 0, 9, 7), uniform(2, 50, 0, 9, 7));
        assert_ne!(uniform(2, 50, 0, 9, 7), uniform(2, 50, 0, 9, 8));
        assert!(uniform(1, 100, 3, 4, 1).counts[0].iter().all(|&c| (3..=4).contains(&c)));
    }

    #[test]
    fn periodic_repeats() {
        let t = periodic(&[vec![3, 5, 2]], 3);
        assert_eq!(t.counts[0], vec![3, 5, 2, 3, 5, 2, 3, 5, 2]);
    }
}
