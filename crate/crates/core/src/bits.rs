//! Packed bit-vector helpers. Literal vectors are stored as little-endian
//! `u64` words: literal `k` is bit `k % 64` of word `k / 64`.

use alloc::vec::Vec;

#[inline]
pub const fn words_for(n_bits: usize) -> usize {
    n_bits.div_ceil(64)
}

/// Mask of the valid bits in the last word of an `n_bits`-long vector.
#[inline]
pub const fn tail_mask(n_bits: usize) -> u64 {
    match n_bits % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Mask of valid bits for word `w` of an `n_bits`-long vector.
#[inline]
pub fn word_mask(n_bits: usize, w: usize) -> u64 {
    if w + 1 == words_for(n_bits) {
        tail_mask(n_bits)
    } else {
        u64::MAX
    }
}

#[inline]
pub fn get(words: &[u64], k: usize) -> bool {
    words[k / 64] >> (k % 64) & 1 == 1
}

#[inline]
pub fn set(words: &mut [u64], k: usize, value: bool) {
    let bit = 1u64 << (k % 64);
    if value {
        words[k / 64] |= bit;
    } else {
        words[k / 64] &= !bit;
    }
}

pub fn pack(bits: &[bool]) -> Vec<u64> {
    let mut words = alloc::vec![0u64; words_for(bits.len())];
    for (k, &b) in bits.iter().enumerate() {
        if b {
            words[k / 64] |= 1 << (k % 64);
        }
    }
    words
}

pub fn unpack(words: &[u64], n_bits: usize) -> Vec<bool> {
    (0..n_bits).map(|k| get(words, k)).collect()
}

/// Iterates the indices of set bits in ascending order.
pub fn ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        core::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(w * 64 + b)
        })
    })
}

pub fn count_ones(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}
