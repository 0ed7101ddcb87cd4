//! Small-bias sign strings via the powering construction: the seed is a
//! pair (a, b) of GF(2^f) elements and bit i is <a, b^i>, the GF(2) inner
//! product of the coefficient vectors. For any nonempty character set S the
//! signed expectation is Pr_b[sum_{i in S} b^i = 0] <= (n-1)/2^f, so
//! choosing 2^f >= n/eps gives declared bias eps.

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::generator::{check_seed, Generator};
use crate::gf2::{parity64, BinaryField};
use crate::seed::Seed;
use crate::sign::SignVector;

#[derive(Clone, Debug)]
pub struct EpsBiasedBits {
    n: usize,
    field: BinaryField,
    declared_bias: f64,
}

impl EpsBiasedBits {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("n must be >= 1".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParam(format!("eps must be in (0,1), got {eps}")));
        }
        let min_size = (n as f64 / eps).ceil();
        if !min_size.is_finite() || min_size > (1u128 << 63) as f64 {
            return Err(Error::Capacity(format!(
                "eps={eps} at n={n} needs a binary field larger than 2^63"
            )));
        }
        let field = BinaryField::with_at_least(min_size as u128)?;
        Ok(EpsBiasedBits {
            n,
            field,
            declared_bias: eps,
        })
    }

    /// Smallest bias this module can declare at length `n` (field capped at
    /// 2^63 elements). Callers that derive tiny theoretical biases clamp to
    /// this floor.
    pub fn min_supported_bias(n: usize) -> f64 {
        n as f64 / (1u128 << 63) as f64
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn declared_bias(&self) -> f64 {
        self.declared_bias
    }

    pub fn field_bits(&self) -> u32 {
        self.field.bits()
    }

    fn split_seed(&self, seed: &Seed) -> (u64, u64) {
        let f = self.field.bits() as usize;
        (seed.read_u64(0, f), seed.read_u64(f, f))
    }

    /// Streaming evaluator over positions; positions must be requested in
    /// nondecreasing order.
    pub fn walker(&self, seed: &Seed) -> Result<BitWalker> {
        check_seed(self, seed)?;
        let (a, b) = self.split_seed(seed);
        Ok(BitWalker::new(self.field, a, b))
    }

    /// Packed bits for positions start..start+count. Positions are scanned
    /// in 8-blocks of independent products off a common base power so the
    /// field multiplies pipeline instead of forming one latency chain.
    pub fn expand_range(&self, seed: &Seed, start: u64, count: usize) -> Result<Vec<u64>> {
        check_seed(self, seed)?;
        let (a, b) = self.split_seed(seed);
        let mut out = vec![0u64; count.div_ceil(64)];
        // pre[j] = b^(j+1); the block's first bit reads the base directly
        let mut pre = [0u64; 8];
        pre[0] = b;
        for j in 1..8 {
            pre[j] = self.field.mul(pre[j - 1], b);
        }
        let mut base = self.field.pow(b, start);
        let mut idx = 0usize;
        while idx < count {
            out[idx / 64] |= parity64(a & base) << (idx % 64);
            let run = (count - idx).min(8);
            if run > 1 {
                let powers = self.field.mul8(base, &pre);
                for (j, &p) in powers.iter().enumerate().take(run - 1) {
                    let pos = idx + j + 1;
                    out[pos / 64] |= parity64(a & p) << (pos % 64);
                }
                base = powers[7 - (8 - run)];
            } else {
                base = self.field.mul(base, pre[0]);
            }
            idx += 8;
        }
        Ok(out)
    }
}

impl Generator for EpsBiasedBits {
    fn seed_len(&self) -> usize {
        2 * self.field.bits() as usize
    }
    fn output_len(&self) -> usize {
        self.n
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        let words = self.expand_range(seed, 0, self.n)?;
        Ok(SignVector::from_bit_words(words, self.n))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::EpsBiasedBits {
            n: self.n,
            field_bits: self.field.bits(),
            declared_bias: self.declared_bias,
        }
    }
}

/// Forward-only evaluator of bits <a, b^i> with squared powers of b filled
/// on demand, so a jump of g positions costs popcount(g) field
/// multiplications after at most log2(g) one-time squarings.
pub struct BitWalker {
    field: BinaryField,
    a: u64,
    pows2: [u64; 64],
    filled: u32,
    /// b^0..b^7 for block reads; filled on first use
    pre8: Option<[u64; 8]>,
    cur_exp: u64,
    cur: u64, // b^cur_exp
}

impl BitWalker {
    fn new(field: BinaryField, a: u64, b: u64) -> Self {
        let mut pows2 = [0u64; 64];
        pows2[0] = b;
        BitWalker {
            field,
            a,
            pows2,
            filled: 1,
            pre8: None,
            cur_exp: 0,
            cur: 1,
        }
    }

    #[inline(always)]
    fn advance_to(&mut self, pos: u64) {
        debug_assert!(pos >= self.cur_exp, "walker positions must be nondecreasing");
        let mut gap = pos - self.cur_exp;
        if gap != 0 {
            let need = 64 - gap.leading_zeros();
            while self.filled < need {
                self.pows2[self.filled as usize] =
                    self.field.sqr(self.pows2[self.filled as usize - 1]);
                self.filled += 1;
            }
            while gap != 0 {
                let t = gap.trailing_zeros();
                self.cur = self.field.mul(self.cur, self.pows2[t as usize]);
                gap &= gap - 1;
            }
            self.cur_exp = pos;
        }
    }

    /// Bit at `pos`; `pos` must be >= the previously queried position.
    #[inline(always)]
    pub fn bit_at(&mut self, pos: u64) -> bool {
        self.advance_to(pos);
        parity64(self.a & self.cur) == 1
    }

    /// Up to eight consecutive bits starting at `pos` (little-endian in the
    /// returned byte), via one batch of independent products. Leaves the
    /// walker at `pos`, so later positions must be >= `pos`.
    #[inline(always)]
    pub fn block_bits(&mut self, pos: u64, len: usize) -> u8 {
        debug_assert!(len >= 1 && len <= 8);
        self.advance_to(pos);
        let mut out = parity64(self.a & self.cur) as u8;
        if len > 1 {
            if self.pre8.is_none() {
                self.fill_pre8();
            }
            let pre = self.pre8.as_ref().unwrap();
            let powers = self.field.mul8(self.cur, pre);
            for (j, &p) in powers.iter().enumerate().take(len - 1) {
                out |= (parity64(self.a & p) as u8) << (j + 1);
            }
        }
        out
    }

    #[cold]
    fn fill_pre8(&mut self) {
        // pre[j] = b^(j+1)
        let b = self.pows2[0];
        let mut pre = [0u64; 8];
        pre[0] = b;
        for j in 1..8 {
            pre[j] = self.field.mul(pre[j - 1], b);
        }
        self.pre8 = Some(pre);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::enumerate_seeds;

    #[test]
    fn single_coordinate_is_exactly_uniform() {
        // n=1 uses exponent 0 only: bit = <a, 1> = low bit of a.
        let g = EpsBiasedBits::new(1, 0.5).unwrap();
        let mut minus = 0u64;
        let total = 1u64 << g.seed_len();
        for seed in enumerate_seeds(g.seed_len()) {
            if g.expand(&seed).unwrap().sign(0) == -1 {
                minus += 1;
            }
        }
        assert_eq!(2 * minus, total);
    }

    #[test]
    fn exhaustive_bias_within_declared_at_toy_size() {
        // n=4 over GF(16): all 256 seeds, all 15 nonempty S.
        let g = EpsBiasedBits::new(4, 4.0 / 16.0).unwrap();
        assert_eq!(g.field_bits(), 4);
        let mut max_bias: f64 = 0.0;
        for s_mask in 1u32..16 {
            let mut sum = 0i64;
            for seed in enumerate_seeds(g.seed_len()) {
                let x = g.expand(&seed).unwrap();
                let mut chi = 1i64;
                for i in 0..4 {
                    if (s_mask >> i) & 1 == 1 {
                        chi *= x.sign(i) as i64;
                    }
                }
                sum += chi;
            }
            max_bias = max_bias.max((sum as f64 / 256.0).abs());
        }
        assert!(max_bias <= 0.25 + 1e-12, "max bias {max_bias} exceeds 1/4");
    }

    #[test]
    fn expand_is_deterministic_and_walker_agrees() {
        let g = EpsBiasedBits::new(100, 0.01).unwrap();
        let seed = Seed::from_u64(0x2f9c_aa01, g.seed_len());
        let a = g.expand(&seed).unwrap();
        let b = g.expand(&seed).unwrap();
        assert_eq!(a, b);
        let mut w = g.walker(&seed).unwrap();
        for i in (0..100).step_by(7) {
            assert_eq!(w.bit_at(i as u64), a.bit(i));
        }
    }

    #[test]
    fn capacity_error_when_field_too_large() {
        assert!(matches!(
            EpsBiasedBits::new(1 << 20, 1e-15),
            Err(Error::Capacity(_))
        ));
    }
}
