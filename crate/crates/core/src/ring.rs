//! Arithmetic over `Z_{2^a}` on `u64` words.
//!
//! Ring elements are stored in the low `a` bits of a `u64`; all operations
//! reduce modulo `2^a`. The ring width is carried alongside values (not in
//! the type) because it is a runtime protocol parameter.

/// Largest supported ring width. Elements must fit a `u64` with the mask
/// `(1 << a) - 1` well-defined.
pub const MAX_RING_BITS: u32 = 63;

/// Bit mask selecting the low `a` bits.
#[inline]
pub fn mask(a: u32) -> u64 {
    debug_assert!(a >= 1 && a <= MAX_RING_BITS);
    (1u64 << a) - 1
}

#[inline]
pub fn add(x: u64, y: u64, a: u32) -> u64 {
    x.wrapping_add(y) & mask(a)
}

#[inline]
pub fn sub(x: u64, y: u64, a: u32) -> u64 {
    x.wrapping_sub(y) & mask(a)
}

#[inline]
pub fn mul(x: u64, y: u64, a: u32) -> u64 {
    x.wrapping_mul(y) & mask(a)
}

#[inline]
pub fn neg(x: u64, a: u32) -> u64 {
    x.wrapping_neg() & mask(a)
}

/// Reduce a signed integer into `[0, 2^a)`.
#[inline]
pub fn from_i128(x: i128, a: u32) -> u64 {
    (x.rem_euclid(1i128 << a)) as u64
}
