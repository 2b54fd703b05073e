//! Counter-based derivation of per-sample RNG streams from one master seed.
//!
//! Each (degree, sample) pair owns the stream indexed by `n << 32 | sample`;
//! the index is mixed with the master seed through two rounds of the
//! splitmix64 finalizer before seeding a ChaCha8 generator. Workers pull whole
//! streams, never share one, and therefore produce the same draws regardless
//! of scheduling — the determinism contract of the whole lab rests here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sample slot reserved for the per-degree Metropolis chain (perturbed
/// measures draw all coefficient points from one sequential chain stream).
pub const CHAIN_SLOT: u64 = u32::MAX as u64;

/// The splitmix64 output mixer: an avalanching bijection on u64.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream counter for degree `n`, sample `sample_id`.
pub fn stream_index(n: usize, sample_id: u64) -> u64 {
    debug_assert!((n as u64) < (1 << 32));
    ((n as u64) << 32) | sample_id
}

/// The ChaCha8 stream owned by (master, n, sample_id).
pub fn rng_for(master: u64, n: usize, sample_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(stream_index(n, sample_id))))
}

/// The per-degree chain stream (used by Metropolis batch draws).
pub fn rng_for_chain(master: u64, n: usize) -> ChaCha8Rng {
    rng_for(master, n, CHAIN_SLOT)
}
