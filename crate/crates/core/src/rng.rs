//! Per-path random streams.
//!
//! Every path gets its own ChaCha8 stream selected by `(master_seed, index)`,
//! so a path's noise does not depend on which worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedLineage {
    pub master_seed: u64,
    pub index: u64,
}

impl SeedLineage {
    pub fn new(master_seed: u64, index: u64) -> Self {
        SeedLineage { master_seed, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        path_rng(self.master_seed, self.index)
    }
}

pub fn path_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
