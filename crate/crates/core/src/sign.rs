use crate::seed::Seed;

/// A length-`n` string over {-1, +1}, stored one bit per coordinate.
///
/// Canonical convention throughout the crate: bit 0 maps to +1 and bit 1
/// maps to -1, i.e. `sign = 1 - 2*bit`. Coordinate-wise sign product is
/// word-wise XOR under this packing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector {
    words: Vec<u64>,
    n: usize,
}

impl SignVector {
    /// The all-(+1) vector.
    pub fn plus_ones(n: usize) -> Self {
        SignVector {
            words: vec![0; n.div_ceil(64)],
            n,
        }
    }

    pub fn from_signs(signs: &[i8]) -> Self {
        let mut v = SignVector::plus_ones(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            assert!(s == 1 || s == -1, "entries must be +1 or -1");
            if s == -1 {
                v.set_bit(i, true);
            }
        }
        v
    }

    /// Reinterprets a bit string as signs (bit 0 -> +1).
    pub fn from_seed_bits(seed: &Seed) -> Self {
        let mut v = SignVector::plus_ones(seed.len());
        v.words.copy_from_slice(seed.words());
        v
    }

    pub fn from_bit_words(words: Vec<u64>, n: usize) -> Self {
        assert_eq!(words.len(), n.div_ceil(64));
        let mut v = SignVector { words, n };
        v.mask_tail();
        v
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.bit(i) {
            -1
        } else {
            1
        }
    }

    pub fn set_bit(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.n);
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn set_sign(&mut self, i: usize, s: i8) {
        self.set_bit(i, s == -1);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Coordinate-wise sign product (XOR of packings).
    pub fn product(&self, other: &SignVector) -> SignVector {
        assert_eq!(self.n, other.n, "length mismatch in sign product");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        SignVector { words, n: self.n }
    }

    /// Global negation.
    pub fn negated(&self) -> SignVector {
        let mut v = SignVector {
            words: self.words.iter().map(|w| !w).collect(),
            n: self.n,
        };
        v.mask_tail();
        v
    }

    pub fn count_minus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Inner product with real weights.
    pub fn dot(&self, w: &[f64]) -> f64 {
        assert_eq!(w.len(), self.n);
        let mut acc = 0.0;
        for (wi, &x) in w.iter().enumerate() {
            acc += if self.bit(wi) { -x } else { x };
        }
        acc
    }

    /// Inner product with a {0,±1} vector given as (plus, minus) masks.
    /// Returns an exact integer.
    pub fn dot_signed_masks(&self, plus: &[u64], minus: &[u64], n_plus: i64, n_minus: i64) -> i64 {
        debug_assert_eq!(plus.len(), self.words.len());
        let mut neg_p = 0i64;
        let mut neg_m = 0i64;
        for (i, w) in self.words.iter().enumerate() {
            neg_p += (w & plus[i]).count_ones() as i64;
            neg_m += (w & minus[i]).count_ones() as i64;
        }
        // sum over plus-support of x_i minus sum over minus-support
        (n_plus - 2 * neg_p) - (n_minus - 2 * neg_m)
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.n).map(|i| self.sign(i)).collect()
    }

    fn mask_tail(&mut self) {
        let rem = self.n % 64;
        if rem != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= (1u64 << rem) - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_is_xor() {
        let a = SignVector::from_signs(&[1, 1, -1, -1]);
        let b = SignVector::from_signs(&[1, -1, 1, -1]);
        assert_eq!(a.product(&b).to_signs(), vec![1, -1, -1, 1]);
    }

    #[test]
    fn negation_flips_every_sign() {
        let a = SignVector::from_signs(&[1, -1, 1]);
        assert_eq!(a.negated().to_signs(), vec![-1, 1, -1]);
        assert_eq!(a.negated().negated(), a);
    }

    #[test]
    fn dot_matches_naive() {
        let a = SignVector::from_signs(&[1, -1, -1, 1, 1]);
        let w = [0.5, 1.0, -2.0, 0.0, 3.0];
        let naive: f64 = w
            .iter()
            .enumerate()
            .map(|(i, &wi)| wi * a.sign(i) as f64)
            .sum();
        assert!((a.dot(&w) - naive).abs() < 1e-12);
    }

    #[test]
    fn signed_mask_dot_matches_naive() {
        let a = SignVector::from_signs(&[1, -1, -1, 1, 1, -1]);
        // v = (+1, 0, -1, +1, -1, 0)
        let plus = vec![0b001001u64];
        let minus = vec![0b010100u64];
        let naive: i64 = [1i64, 0, -1, 1, -1, 0]
            .iter()
            .enumerate()
            .map(|(i, &vi)| vi * a.sign(i) as i64)
            .sum();
        assert_eq!(a.dot_signed_masks(&plus, &minus, 2, 2), naive);
    }
}
