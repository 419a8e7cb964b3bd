use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby (seed, index) pairs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream for candidate `index`, so parallel evaluation order
/// never changes the draws.
pub fn stream(seed: u64, index: u64) -> Rng {
    Rng::seed_from_u64(mix(seed ^ mix(index.wrapping_add(0xA5A5_5A5A))))
}

/// Seed for sub-task `index` of a run seeded with `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(0x5A5A_A5A5)))
}
