use crate::error::{Error, Result};

/// A finite bit string used to seed generators and hash families.
///
/// Bits are stored little-endian within `u64` words: bit `i` lives at
/// word `i / 64`, position `i % 64`. Generators reject seeds whose length
/// differs from their declared seed length instead of truncating.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Seed {
    words: Vec<u64>,
    len: usize,
}

impl Seed {
    pub fn zero(len: usize) -> Self {
        Seed {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// Builds a seed of `len` bits from the low bits of `value`.
    /// Panics if `len > 64`. Used by exhaustive-enumeration oracles.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        let mask = if len == 64 { !0 } else { (1u64 << len) - 1 };
        Seed {
            words: vec![value & mask],
            len,
        }
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() == len.div_ceil(64).max(0));
        let mut s = Seed { words, len };
        s.mask_tail();
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Seed::zero(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    /// Parses a hex string (most significant nibble first) into `len` bits.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars().rev() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::Malformed(format!("bad hex digit {c:?}")))? as u64;
            for k in 0..4 {
                bits.push((v >> k) & 1 == 1);
            }
        }
        bits.resize(len, false);
        Ok(Seed::from_bits(&bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let w = &mut self.words[i / 64];
        if v {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Extracts bits `[start, start + len)` into a fresh seed.
    pub fn slice(&self, start: usize, len: usize) -> Seed {
        assert!(start + len <= self.len, "slice out of range");
        let w = start / 64;
        let off = start % 64;
        let out_words = len.div_ceil(64);
        let mut words = Vec::with_capacity(out_words);
        for k in 0..out_words {
            let mut v = self.words.get(w + k).copied().unwrap_or(0) >> off;
            if off != 0 {
                v |= self.words.get(w + k + 1).copied().unwrap_or(0) << (64 - off);
            }
            words.push(v);
        }
        let mut out = Seed { words, len };
        out.mask_tail();
        out
    }

    /// Reads `count` bits starting at `start` as a little-endian integer.
    pub fn read_u64(&self, start: usize, count: usize) -> u64 {
        assert!(count <= 64 && start + count <= self.len);
        let mut v = 0u64;
        for i in 0..count {
            if self.get(start + i) {
                v |= 1 << i;
            }
        }
        v
    }

    pub fn concat(&self, other: &Seed) -> Seed {
        let mut out = Seed::zero(self.len + other.len);
        for i in 0..self.len {
            if self.get(i) {
                out.set(i, true);
            }
        }
        for i in 0..other.len {
            if other.get(i) {
                out.set(self.len + i, true);
            }
        }
        out
    }

    /// Fills the seed with RNG output.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Seed {
        let mut words = vec![0u64; len.div_ceil(64)];
        for w in &mut words {
            *w = rng.gen();
        }
        let mut s = Seed { words, len };
        s.mask_tail();
        s
    }

    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        let nibbles = self.len.div_ceil(4);
        for k in (0..nibbles).rev() {
            let mut v = 0u32;
            for j in 0..4 {
                let i = k * 4 + j;
                if i < self.len && self.get(i) {
                    v |= 1 << j;
                }
            }
            out.push(char::from_digit(v, 16).unwrap());
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Iterates every seed of length `len` (for exhaustive oracles; `len <= 30`).
pub fn enumerate_seeds(len: usize) -> impl Iterator<Item = Seed> {
    assert!(len <= 30, "exhaustive enumeration capped at 2^30 seeds");
    (0u64..(1u64 << len)).map(move |v| Seed::from_u64(v, len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_concat_roundtrip() {
        let s = Seed::from_u64(0b1011_0010_1101, 12);
        let a = s.slice(0, 5);
        let b = s.slice(5, 7);
        assert_eq!(a.concat(&b), s);
    }

    #[test]
    fn hex_roundtrip() {
        let s = Seed::from_u64(0xabc5, 16);
        assert_eq!(Seed::from_hex(&s.to_hex(), 16).unwrap(), s);
    }

    #[test]
    fn read_u64_matches_bits() {
        let s = Seed::from_u64(0b1101_0110, 8);
        assert_eq!(s.read_u64(1, 4), 0b1011);
    }
}
