//! Deterministic synthetic data.
//!
//! Feature tables in benchmarks are never stored: every element is a pure
//! function of `(seed, row, col)`, so equality checks between two gather
//! paths need no reference dataset and reports are identical across
//! platforms.

/// SplitMix64 step (Steele, Lea, Flood 2014). Stable, documented, and good
/// enough to decorrelate rows and columns.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthetic element value at `(row, col)` for a given seed.
///
/// Defined as `splitmix64(splitmix64(splitmix64(seed) ^ row) ^ col)`;
/// callers truncate to their element width.
pub fn synth_element(seed: u64, row: u64, col: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ row) ^ col)
}
