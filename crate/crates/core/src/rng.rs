//! Per-trial random substreams.
//!
//! Every trial draws from its own ChaCha8 stream: the 256-bit key is
//! expanded from the 64-bit master seed by `SeedableRng::seed_from_u64`
//! (PCG32 expansion, fixed by `rand_core`), and the ChaCha stream id is
//! `(arm << 56) | trial_index`. Coin flips consume single bits of a 64-bit
//! word, least-significant first; uniforms take the top 53 bits of a fresh
//! word. None of this depends on thread count or trial scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Largest trial index representable in a stream id.
pub const MAX_TRIAL_INDEX: u64 = (1 << 56) - 1;

/// Deterministic random source owned by a single trial.
#[derive(Debug, Clone)]
pub struct TrialRng {
    inner: ChaCha8Rng,
    bits: u64,
    remaining: u32,
}

impl TrialRng {
    pub fn for_trial(master_seed: u64, arm: u8, trial_index: u64) -> Self {
        assert!(trial_index <= MAX_TRIAL_INDEX, "trial index {trial_index} exceeds stream space");
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream((u64::from(arm) << 56) | trial_index);
        TrialRng {
            inner,
            bits: 0,
            remaining: 0,
        }
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        if self.remaining == 0 {
            self.bits = self.inner.next_u64();
            self.remaining = 64;
        }
        let bit = self.bits & 1 == 1;
        self.bits >>= 1;
        self.remaining -= 1;
        bit
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
