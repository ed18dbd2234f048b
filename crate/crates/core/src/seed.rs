//! Deterministic derivation of child seeds from a master seed.

/// SplitMix64 finalizer over `base` combined with `tag`.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a path of tags, e.g. `(run, fold)`.
pub fn derive_path(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(base, |seed, &tag| derive_seed(seed, tag))
}
