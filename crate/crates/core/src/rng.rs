//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit seed derived from `(run seed, component, index)`. ChaCha8 is a
//! fixed, platform-independent stream cipher generator, so splits, shuffles,
//! initializations and swarm moves reproduce bit-for-bit on any machine.
//!
//! Seed derivation hashes the component label with 64-bit FNV-1a, then mixes
//! it with the run seed and index through two rounds of the SplitMix64
//! finalizer.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// The generator used everywhere.
pub type Rng = ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed for `component` and `index` from the run seed.
pub fn derive_seed(seed: u64, component: &str, index: u64) -> u64 {
    let a = splitmix64(seed ^ fnv1a(component));
    splitmix64(a ^ index.wrapping_mul(0xd134_2543_de82_ef95))
}

/// Opens the random stream for `(seed, component, index)`.
pub fn stream(seed: u64, component: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, component, index))
}
