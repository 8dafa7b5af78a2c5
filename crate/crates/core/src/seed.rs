//! Counter-based seed derivation. Every random stream of a run is keyed by
//! `(root, tag, index)`, so adding work items never shifts the streams of
//! existing ones.

/// Stream tags.
pub mod tag {
    pub const BACKGROUND: u64 = 1;
    pub const PLANE: u64 = 2;
    pub const PLACEMENT: u64 = 3;
    pub const OBSERVATION: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const RANSAC: u64 = 6;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `index` in stream `tag` under run seed `root`.
pub fn derive_seed(root: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ tag.wrapping_mul(GOLDEN)) ^ index)
}

/// Seed of a nested item, e.g. instance `i` of scene `s`.
pub fn derive_seed2(root: u64, tag: u64, outer: u64, inner: u64) -> u64 {
    splitmix64(derive_seed(root, tag, outer) ^ inner.wrapping_mul(GOLDEN))
}
