//! Deterministic random-stream derivation.
//!
//! Every stochastic step of a run draws from its own ChaCha stream keyed by
//! `(master seed, purpose, generation, index)`. Results are therefore
//! independent of scheduling: evaluating members in parallel or reordering
//! offspring construction cannot change what any stream produces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. The numeric values are part of the reproducibility
/// contract: changing them changes every seeded run.
pub mod stream {
    /// Initial population `P_1` slots.
    pub const INIT_P: u64 = 1;
    /// Initial offspring `Q_1` slots.
    pub const INIT_Q: u64 = 2;
    /// Per-offspring crossover (tournament draws + gene coins).
    pub const CROSSOVER: u64 = 3;
    /// Per-offspring mutation (tournament draw + site/gene draws).
    pub const MUTATION: u64 = 4;
    /// Benchmark-generator jitter.
    pub const BENCH_JITTER: u64 = 5;
}

/// Derive an independent ChaCha8 stream from the master seed.
///
/// The four words are laid out verbatim in the 32-byte ChaCha seed, so
/// distinct `(purpose, generation, index)` triples can never collide.
pub fn derive_rng(master_seed: u64, purpose: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&purpose.to_le_bytes());
    seed[16..24].copy_from_slice(&generation.to_le_bytes());
    seed[24..32].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
