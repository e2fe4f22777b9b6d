//! Named random streams derived from one master seed.
//!
//! A stream is identified by a component label plus integer indices, so adding
//! a camera or a trial never perturbs the streams of unrelated components.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for the stream `(label, indices)` under `master`.
pub fn derive_seed(master: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ fnv1a(label));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(master: u64, label: &str, indices: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, label, indices))
}
