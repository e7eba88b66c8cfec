//! Seed derivation.
//!
//! Every random stream in the workspace is a ChaCha12 generator seeded with
//! the root seed and placed on stream id `path_index * 8 + purpose`. A Monte
//! Carlo path therefore owns a fixed set of independent substreams whose
//! content does not depend on thread count or scheduling, and two runs with
//! the same root seed are bit-identical.

use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

/// Purpose slot of a per-path substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Brownian increments driving the mortality intensity (W0).
    MortalityW0 = 0,
    /// Brownian increments driving the risky asset (W1).
    AssetW1 = 1,
    /// Per-step thinning uniforms for claim arrivals.
    ClaimThinning = 2,
    /// Per-step claim-size draws.
    ClaimSizes = 3,
}

const STREAMS_PER_PATH: u64 = 8;

/// Generator for `(root_seed, path_index, kind)`.
pub fn stream_rng(root_seed: u64, path_index: u64, kind: StreamKind) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(root_seed);
    rng.set_stream(path_index.wrapping_mul(STREAMS_PER_PATH) + kind as u64);
    rng
}

/// FNV-1a over raw little-endian bytes of an f64 slice. Used for the
/// shared-shock checksums recorded in run manifests.
pub fn checksum_f64(data: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for x in data {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}
