//! Seeded random streams.
//!
//! Every random draw comes from a `ChaCha8Rng` seeded with the run seed and
//! placed on a stream that names its consumer:
//!
//! | consumer                | stream id                     |
//! |-------------------------|-------------------------------|
//! | adversary of trial `r`  | `r << 32`                     |
//! | element `j` of trial `r`| `(r << 32) \| (j + 1)`        |
//!
//! ChaCha output is specified bit-for-bit, so traces are reproducible
//! across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn adversary_stream(seed: u64, trial: u32) -> Rng {
    stream(seed, u64::from(trial) << 32)
}

pub fn element_stream(seed: u64, trial: u32, element: usize) -> Rng {
    let element = u32::try_from(element + 1).expect("element index fits in 32 bits");
    stream(seed, (u64::from(trial) << 32) | u64::from(element))
}
