//! Seeded random streams.
//!
//! Every random decision in a run is drawn from a ChaCha8 generator keyed by the
//! experiment seed plus a fixed stream id, so independent consumers (data
//! generation, initialization, shuffling, mixing) never perturb one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

pub mod stream {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const IMBALANCE: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const MIX: u64 = 6;
    pub const FINETUNE: u64 = 7;
    pub const GEOMETRY: u64 = 8;
}

pub fn seeded(seed: u64, stream: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
