//! Reproducible random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream addressed by
//! `(seed, domain, index)`. The seed and domain select the key, the index
//! selects the ChaCha stream, so per-source graph sampling and per-replica
//! simulation produce the same numbers whatever order they run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags keep independent uses of one master seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Graph = 0x6772_6170_6800_0001,
    Simulation = 0x7369_6d75_6c00_0002,
    PairSampling = 0x7061_6972_7300_0003,
    Replica = 0x7265_706c_6900_0004,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ domain as u64));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. the graph or simulation seed of one replica.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master ^ Domain::Replica as u64), |acc, &p| {
            splitmix64(acc ^ splitmix64(p))
        })
}
