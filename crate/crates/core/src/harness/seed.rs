use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Name and version of the per-cell random stream. Changing the derivation
/// below requires bumping this.
pub const RNG_STREAM: &str = "chacha20-fnv1a-splitmix/v1";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream for `(global_seed, prefix_id, replicate)`; independent
/// of scheduling and of every other cell.
pub fn stream_seed(global_seed: u64, prefix_id: &str, replicate: usize) -> u64 {
    let mut s = splitmix(global_seed);
    s = splitmix(s ^ fnv1a(prefix_id.as_bytes()));
    splitmix(s ^ replicate as u64)
}

pub fn stream_rng(global_seed: u64, prefix_id: &str, replicate: usize) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(stream_seed(global_seed, prefix_id, replicate))
}
