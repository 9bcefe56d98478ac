//! Seed derivation for reproducible experiment fan-out.

/// Derives an independent stream seed from a master seed and a stream index
/// (SplitMix64 finalizer). Used so that trial `k` of a sweep sees the same
/// stream regardless of execution order.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
