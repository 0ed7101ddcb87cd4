//! Hash families [n] -> [m] with declared bias and/or independence, per the
//! pointwise-sum composition rule: a delta-biased family from bit-planes of
//! one small-bias string, a k-wise family from degree-(k-1) polynomial
//! evaluation, their mod-m sum carrying both guarantees at once, and the
//! spreading instantiation used by the large-alpha generator.
//!
//! Sign distributions (m = 2 presented over {-1,+1}) are the same objects;
//! `KWiseBits` and `CombinedBits` wrap them as generators.

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::generator::{check_seed, Generator};
use crate::seed::Seed;
use crate::sign::SignVector;
use crate::smallbias::EpsBiasedBits;
use crate::gf2::BinaryField;
use serde::{Deserialize, Serialize};

/// JSON descriptor for experiment reproducibility.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FamilyDescriptor {
    pub r#type: String,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub k: usize,
    pub field_bits: u32,
    pub seed_length: usize,
}

/// A seed-addressable family of functions [n] -> [m].
pub trait HashFamily: Send + Sync {
    fn domain(&self) -> usize;
    fn range(&self) -> usize;
    fn seed_len(&self) -> usize;
    fn evaluate(&self, seed: &Seed, i: usize) -> Result<u32>;
    fn declared_bias(&self) -> f64;
    fn declared_independence(&self) -> usize;
    fn family_descriptor(&self) -> FamilyDescriptor;

    /// Bucket of every index; the default loops `evaluate`.
    fn eval_all(&self, seed: &Seed) -> Result<Vec<u32>> {
        (0..self.domain()).map(|i| self.evaluate(seed, i)).collect()
    }
}

fn check_family_seed(f: &dyn HashFamily, seed: &Seed) -> Result<()> {
    if seed.len() != f.seed_len() {
        return Err(Error::SeedLength {
            expected: f.seed_len(),
            got: seed.len(),
        });
    }
    Ok(())
}

/// delta-biased family via bit-planes: bucket bits of index i sit at
/// positions i*L + t (t = 0..L-1, little-endian) of one small-bias string
/// over n*L positions with bias delta. Any joint event over r indices
/// expands into characters of that string, so the Definition deviation is
/// at most delta. Requires m a power of two.
#[derive(Clone, Debug)]
pub struct DeltaBiasedFamily {
    n: usize,
    m: usize,
    planes: u32,
    base: Option<EpsBiasedBits>,
    delta: f64,
}

impl DeltaBiasedFamily {
    pub fn new(n: usize, m: usize, delta: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParam("n and m must be >= 1".into()));
        }
        if !m.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "delta-biased family needs m a power of two, got {m}"
            )));
        }
        let planes = m.trailing_zeros();
        let base = if planes == 0 {
            None
        } else {
            Some(EpsBiasedBits::new(n * planes as usize, delta)?)
        };
        Ok(DeltaBiasedFamily {
            n,
            m,
            planes,
            base,
            delta,
        })
    }

    pub fn base(&self) -> Option<&EpsBiasedBits> {
        self.base.as_ref()
    }

    /// Buckets of a sorted coordinate subset, one streaming pass.
    pub fn eval_sorted(&self, seed: &Seed, coords: &[u32]) -> Result<Vec<u32>> {
        let Some(mut walker) = self.bucket_walker(seed)? else {
            return Ok(vec![0; coords.len()]);
        };
        Ok(coords.iter().map(|&i| walker.bucket_of(i)).collect())
    }

    /// Streaming per-coordinate bucket evaluator (None when m = 1);
    /// coordinates must be requested in nondecreasing order.
    pub fn bucket_walker(&self, seed: &Seed) -> Result<Option<BucketWalker>> {
        check_family_seed(self, seed)?;
        let Some(base) = &self.base else {
            return Ok(None);
        };
        Ok(Some(BucketWalker {
            walker: base.walker(seed)?,
            planes: self.planes,
            n: self.n,
        }))
    }
}

/// Reads the `planes` bucket bits of successive coordinates off one
/// small-bias bit walker.
pub struct BucketWalker {
    walker: crate::smallbias::BitWalker,
    planes: u32,
    n: usize,
}

impl BucketWalker {
    #[inline(always)]
    pub fn bucket_of(&mut self, i: u32) -> u32 {
        debug_assert!((i as usize) < self.n);
        let l = self.planes as usize;
        let start = i as u64 * l as u64;
        if l <= 8 {
            self.walker.block_bits(start, l) as u32
        } else {
            let mut bucket = 0u32;
            let mut t = 0usize;
            while t < l {
                let take = (l - t).min(8);
                bucket |= (self.walker.block_bits(start + t as u64, take) as u32) << t;
                t += take;
            }
            bucket
        }
    }
}

impl HashFamily for DeltaBiasedFamily {
    fn domain(&self) -> usize {
        self.n
    }
    fn range(&self) -> usize {
        self.m
    }
    fn seed_len(&self) -> usize {
        self.base.as_ref().map_or(0, |b| b.seed_len())
    }
    fn evaluate(&self, seed: &Seed, i: usize) -> Result<u32> {
        Ok(self.eval_sorted(seed, &[i as u32])?[0])
    }
    fn eval_all(&self, seed: &Seed) -> Result<Vec<u32>> {
        check_family_seed(self, seed)?;
        let Some(base) = &self.base else {
            return Ok(vec![0; self.n]);
        };
        let l = self.planes as usize;
        let bits = base.expand_range(seed, 0, self.n * l)?;
        Ok((0..self.n)
            .map(|i| {
                let mut bucket = 0u32;
                for t in 0..l {
                    let pos = i * l + t;
                    bucket |= (((bits[pos / 64] >> (pos % 64)) & 1) as u32) << t;
                }
                bucket
            })
            .collect())
    }
    fn declared_bias(&self) -> f64 {
        self.delta
    }
    fn declared_independence(&self) -> usize {
        0
    }
    fn family_descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor {
            r#type: "delta_biased".into(),
            n: self.n,
            m: self.m,
            delta: self.delta,
            k: 0,
            field_bits: self.base.as_ref().map_or(0, |b| b.field_bits()),
            seed_length: self.seed_len(),
        }
    }
}

/// k-wise independent family from degree-(k-1) polynomial evaluation over
/// GF(2^f) with 2^f >= max(n, m). Power-of-two m keeps the field-to-bucket
/// reduction exactly balanced; other m use floor scaling with rounding bias
/// at most m/2^f, accounted in `declared_bias`.
#[derive(Clone, Debug)]
pub struct KWiseFamily {
    n: usize,
    m: usize,
    k: usize,
    field: BinaryField,
}

impl KWiseFamily {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        if n == 0 || m == 0 || k == 0 {
            return Err(Error::InvalidParam("n, m, k must be >= 1".into()));
        }
        let field = BinaryField::with_at_least(n.max(m) as u128)?;
        Ok(KWiseFamily { n, m, k, field })
    }

    pub fn field(&self) -> &BinaryField {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn coeffs(&self, seed: &Seed) -> Vec<u64> {
        let f = self.field.bits() as usize;
        (0..self.k).map(|j| seed.read_u64(j * f, f)).collect()
    }

    #[inline]
    fn poly_eval(&self, coeffs: &[u64], x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            acc = self.field.mul(acc, x) ^ c;
        }
        acc
    }

    #[inline]
    fn to_bucket(&self, value: u64) -> u32 {
        if self.m.is_power_of_two() {
            (value & (self.m as u64 - 1)) as u32
        } else {
            ((value as u128 * self.m as u128) >> self.field.bits()) as u32
        }
    }

    /// Buckets of a coordinate subset.
    pub fn eval_at(&self, seed: &Seed, coords: &[u32]) -> Result<Vec<u32>> {
        check_family_seed(self, seed)?;
        let coeffs = self.coeffs(seed);
        Ok(coords
            .iter()
            .map(|&i| self.to_bucket(self.poly_eval(&coeffs, i as u64)))
            .collect())
    }
}

impl HashFamily for KWiseFamily {
    fn domain(&self) -> usize {
        self.n
    }
    fn range(&self) -> usize {
        self.m
    }
    fn seed_len(&self) -> usize {
        self.k * self.field.bits() as usize
    }
    fn evaluate(&self, seed: &Seed, i: usize) -> Result<u32> {
        check_family_seed(self, seed)?;
        debug_assert!(i < self.n);
        let coeffs = self.coeffs(seed);
        Ok(self.to_bucket(self.poly_eval(&coeffs, i as u64)))
    }
    fn eval_all(&self, seed: &Seed) -> Result<Vec<u32>> {
        check_family_seed(self, seed)?;
        let coeffs = self.coeffs(seed);
        Ok((0..self.n)
            .map(|i| self.to_bucket(self.poly_eval(&coeffs, i as u64)))
            .collect())
    }
    fn declared_bias(&self) -> f64 {
        if self.m.is_power_of_two() {
            0.0
        } else {
            self.m as f64 / self.field.size() as f64
        }
    }
    fn declared_independence(&self) -> usize {
        self.k
    }
    fn family_descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor {
            r#type: "kwise".into(),
            n: self.n,
            m: self.m,
            delta: self.declared_bias(),
            k: self.k,
            field_bits: self.field.bits(),
            seed_length: self.seed_len(),
        }
    }
}

/// Pointwise sum modulo m of a delta-biased and a k-wise member on a split
/// seed (delta part first), carrying both guarantees simultaneously.
#[derive(Clone, Debug)]
pub struct CombinedFamily {
    delta_part: DeltaBiasedFamily,
    kwise_part: KWiseFamily,
}

impl CombinedFamily {
    pub fn new(n: usize, m: usize, delta: f64, k: usize) -> Result<Self> {
        if !m.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "combined family needs m a power of two, got {m}"
            )));
        }
        Ok(CombinedFamily {
            delta_part: DeltaBiasedFamily::new(n, m, delta)?,
            kwise_part: KWiseFamily::new(n, m, k)?,
        })
    }

    pub fn delta_part(&self) -> &DeltaBiasedFamily {
        &self.delta_part
    }

    pub fn kwise_part(&self) -> &KWiseFamily {
        &self.kwise_part
    }

    fn split(&self, seed: &Seed) -> (Seed, Seed) {
        let d = self.delta_part.seed_len();
        (seed.slice(0, d), seed.slice(d, self.kwise_part.seed_len()))
    }
}

impl HashFamily for CombinedFamily {
    fn domain(&self) -> usize {
        self.delta_part.domain()
    }
    fn range(&self) -> usize {
        self.delta_part.range()
    }
    fn seed_len(&self) -> usize {
        self.delta_part.seed_len() + self.kwise_part.seed_len()
    }
    fn evaluate(&self, seed: &Seed, i: usize) -> Result<u32> {
        check_family_seed(self, seed)?;
        let (sd, sk) = self.split(seed);
        let m = self.range() as u32;
        Ok((self.delta_part.evaluate(&sd, i)? + self.kwise_part.evaluate(&sk, i)?) & (m - 1))
    }
    fn eval_all(&self, seed: &Seed) -> Result<Vec<u32>> {
        check_family_seed(self, seed)?;
        let (sd, sk) = self.split(seed);
        let m = self.range() as u32;
        let d = self.delta_part.eval_all(&sd)?;
        let k = self.kwise_part.eval_all(&sk)?;
        Ok(d.iter().zip(&k).map(|(a, b)| (a + b) & (m - 1)).collect())
    }
    fn declared_bias(&self) -> f64 {
        self.delta_part.declared_bias()
    }
    fn declared_independence(&self) -> usize {
        self.kwise_part.declared_independence()
    }
    fn family_descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor {
            r#type: "combined".into(),
            n: self.domain(),
            m: self.range(),
            delta: self.declared_bias(),
            k: self.declared_independence(),
            field_bits: self.kwise_part.field.bits(),
            seed_length: self.seed_len(),
        }
    }
}

/// Configuration constants for the spreading instantiation; the source
/// lemma fixes only asymptotics, so these are measured, not assumed.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpreadConstants {
    /// Multiplier on ceil(log2(1/eps))^5 for the bucket count.
    pub c_spread: f64,
    /// Exponent in delta = eps^C_spread.
    pub big_c_spread: f64,
}

impl Default for SpreadConstants {
    fn default() -> Self {
        SpreadConstants {
            c_spread: 1.0,
            big_c_spread: 3.0,
        }
    }
}

/// Spreading parameters attached to a delta-biased family: sets of size at
/// least `set_threshold` should land with max bucket load <= |I|/ell except
/// with probability eps.
#[derive(Clone, Debug)]
pub struct SpreadingFamily {
    pub family: DeltaBiasedFamily,
    pub eps: f64,
    pub ell: usize,
    pub set_threshold: usize,
}

/// Builds the spreading family with m = next_pow2(c_spread * ceil(log2(1/eps))^5)
/// buckets and bias eps^C_spread (floored at the supported minimum).
pub fn spreading_family(n: usize, eps: f64, consts: &SpreadConstants) -> Result<SpreadingFamily> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam(format!("eps must be in (0,1), got {eps}")));
    }
    let log_inv = (1.0 / eps).log2().ceil().max(1.0);
    let m_raw = (consts.c_spread * log_inv.powi(5)).ceil() as usize;
    let m = m_raw.max(2).next_power_of_two();
    let planes = m.trailing_zeros() as usize;
    let delta = eps
        .powf(consts.big_c_spread)
        .max(EpsBiasedBits::min_supported_bias(n * planes));
    Ok(SpreadingFamily {
        family: DeltaBiasedFamily::new(n, m, delta)?,
        eps,
        ell: log_inv as usize,
        set_threshold: log_inv.powi(5) as usize,
    })
}

/// True iff every bucket's load within `index_set` is at most |I|/ell
/// (exact integer comparison: load * ell <= |I|).
pub fn verify_spreading(assignment: &[u32], m: usize, index_set: &[usize], ell: usize) -> bool {
    assert!(!index_set.is_empty(), "index set must be nonempty");
    assert!(ell >= 1);
    let mut loads = vec![0usize; m];
    for &i in index_set {
        loads[assignment[i] as usize] += 1;
    }
    let size = index_set.len();
    loads.iter().all(|&load| load * ell <= size)
}

/// m = 2 k-wise family presented over the sign alphabet.
#[derive(Clone, Debug)]
pub struct KWiseBits {
    fam: KWiseFamily,
}

impl KWiseBits {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Ok(KWiseBits {
            fam: KWiseFamily::new(n, 2, k)?,
        })
    }

    pub fn k(&self) -> usize {
        self.fam.k
    }

    /// Sign bits at a coordinate subset without expanding the whole output.
    pub fn bits_at(&self, seed: &Seed, coords: &[u32]) -> Result<Vec<bool>> {
        if seed.len() != self.fam.seed_len() {
            return Err(Error::SeedLength {
                expected: self.fam.seed_len(),
                got: seed.len(),
            });
        }
        let coeffs = self.fam.coeffs(seed);
        Ok(coords
            .iter()
            .map(|&i| self.fam.poly_eval(&coeffs, i as u64) & 1 == 1)
            .collect())
    }
}

impl Generator for KWiseBits {
    fn seed_len(&self) -> usize {
        self.fam.seed_len()
    }
    fn output_len(&self) -> usize {
        self.fam.domain()
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        let buckets = self.fam.eval_all(seed)?;
        let n = self.fam.domain();
        let mut words = vec![0u64; n.div_ceil(64)];
        for (i, &b) in buckets.iter().enumerate() {
            words[i / 64] |= (b as u64 & 1) << (i % 64);
        }
        Ok(SignVector::from_bit_words(words, n))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::KWiseBits {
            n: self.fam.domain(),
            k: self.fam.k,
            field_bits: self.fam.field.bits(),
        }
    }
}

/// m = 2 combined family presented over the sign alphabet: simultaneously
/// delta-biased and k-wise independent.
#[derive(Clone, Debug)]
pub struct CombinedBits {
    fam: CombinedFamily,
}

impl CombinedBits {
    pub fn new(n: usize, delta: f64, k: usize) -> Result<Self> {
        Ok(CombinedBits {
            fam: CombinedFamily::new(n, 2, delta, k)?,
        })
    }

    pub fn family(&self) -> &CombinedFamily {
        &self.fam
    }

    /// Sign bits at a sorted coordinate subset.
    pub fn bits_at(&self, seed: &Seed, coords: &[u32]) -> Result<Vec<bool>> {
        if seed.len() != self.fam.seed_len() {
            return Err(Error::SeedLength {
                expected: self.fam.seed_len(),
                got: seed.len(),
            });
        }
        let (sd, sk) = self.fam.split(seed);
        let d = self.fam.delta_part.eval_sorted(&sd, coords)?;
        let k = self.fam.kwise_part.eval_at(&sk, coords)?;
        Ok(d.iter().zip(&k).map(|(a, b)| (a ^ b) & 1 == 1).collect())
    }
}

impl Generator for CombinedBits {
    fn seed_len(&self) -> usize {
        self.fam.seed_len()
    }
    fn output_len(&self) -> usize {
        self.fam.domain()
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        let buckets = self.fam.eval_all(seed)?;
        let n = self.fam.domain();
        let mut words = vec![0u64; n.div_ceil(64)];
        for (i, &b) in buckets.iter().enumerate() {
            words[i / 64] |= (b as u64 & 1) << (i % 64);
        }
        Ok(SignVector::from_bit_words(words, n))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::CombinedBits {
            n: self.fam.domain(),
            delta: self.fam.declared_bias(),
            k: self.fam.declared_independence(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::enumerate_seeds;

    #[test]
    fn kwise_zero_seed_is_constant_zero() {
        let fam = KWiseFamily::new(8, 4, 3).unwrap();
        let seed = Seed::zero(fam.seed_len());
        assert!(fam.eval_all(&seed).unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn kwise_identity_polynomial_is_identity_map() {
        let fam = KWiseFamily::new(8, 8, 2).unwrap();
        // coefficients (c0, c1) = (0, 1)
        let f = fam.field.bits() as usize;
        let mut seed = Seed::zero(fam.seed_len());
        seed.set(f, true);
        let buckets = fam.eval_all(&seed).unwrap();
        assert_eq!(buckets, (0..8u32).collect::<Vec<_>>());
    }

    #[test]
    fn kwise_pairs_exactly_uniform() {
        // n=4, m=4, k=2 over GF(4): every pair of distinct indices uniform
        // on [4]^2 under exhaustive seeds.
        let fam = KWiseFamily::new(4, 4, 2).unwrap();
        let seeds = 1u64 << fam.seed_len();
        for i in 0..4usize {
            for j in 0..4usize {
                if i == j {
                    continue;
                }
                let mut counts = vec![0u64; 16];
                for seed in enumerate_seeds(fam.seed_len()) {
                    let hi = fam.evaluate(&seed, i).unwrap() as usize;
                    let hj = fam.evaluate(&seed, j).unwrap() as usize;
                    counts[hi * 4 + hj] += 1;
                }
                assert!(counts.iter().all(|&c| c == seeds / 16));
            }
        }
    }

    #[test]
    fn delta_family_with_m2_matches_small_bias_string() {
        let fam = DeltaBiasedFamily::new(6, 2, 0.25).unwrap();
        let bits = EpsBiasedBits::new(6, 0.25).unwrap();
        assert_eq!(fam.seed_len(), bits.seed_len());
        let seed = Seed::from_u64(0x5a3, fam.seed_len());
        let buckets = fam.eval_all(&seed).unwrap();
        let signs = bits.expand(&seed).unwrap();
        for i in 0..6 {
            assert_eq!(buckets[i] == 1, signs.bit(i));
        }
    }

    #[test]
    fn delta_family_joint_deviation_within_delta_at_toy_size() {
        // n=3, m=2, delta=1/4: check Definition deviation for r = 1, 2, 3.
        let delta = 0.25;
        let fam = DeltaBiasedFamily::new(3, 2, delta).unwrap();
        let total = (1u64 << fam.seed_len()) as f64;
        let index_sets: Vec<Vec<usize>> =
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]];
        for idx in &index_sets {
            let r = idx.len();
            for pattern in 0..(1u32 << r) {
                let mut count = 0u64;
                for seed in enumerate_seeds(fam.seed_len()) {
                    let ok = idx.iter().enumerate().all(|(t, &i)| {
                        fam.evaluate(&seed, i).unwrap() == (pattern >> t) & 1
                    });
                    if ok {
                        count += 1;
                    }
                }
                let dev = (count as f64 / total - 0.5f64.powi(r as i32)).abs();
                assert!(dev <= delta + 1e-12, "deviation {dev} exceeds delta");
            }
        }
    }

    #[test]
    fn combined_with_zero_kwise_subseed_equals_delta_member() {
        let fam = CombinedFamily::new(5, 4, 0.25, 2).unwrap();
        let d_len = fam.delta_part.seed_len();
        let seed = Seed::from_u64(0x1b4d, d_len).concat(&Seed::zero(fam.kwise_part.seed_len()));
        let combined = fam.eval_all(&seed).unwrap();
        let alone = fam.delta_part.eval_all(&seed.slice(0, d_len)).unwrap();
        assert_eq!(combined, alone);
    }

    #[test]
    fn combined_seed_split_is_positional() {
        // Swapping sub-seeds changes output (for a seed where the halves
        // differ and the family is sensitive to them).
        let fam = CombinedFamily::new(4, 2, 0.25, 2).unwrap();
        let d = fam.delta_part.seed_len();
        let k = fam.kwise_part.seed_len();
        assert_ne!(d, 0);
        assert_ne!(k, 0);
        let mut changed = false;
        for v in 1u64..64 {
            let sd = Seed::from_u64(v, d);
            let sk = Seed::from_u64(v.wrapping_mul(3) & ((1 << k) - 1), k);
            let fwd = fam.eval_all(&sd.concat(&sk)).unwrap();
            // place kwise bits first (wrong order), padded/truncated views
            let swapped = sk.concat(&sd);
            if swapped.len() == fam.seed_len() {
                let alt = fam.eval_all(&swapped).unwrap();
                if alt != fwd {
                    changed = true;
                    break;
                }
            }
        }
        assert!(changed || fam.seed_len() != d + k);
    }

    #[test]
    fn combined_pairwise_uniform_and_biased_at_toy_size() {
        // toy n=3, m=2, k=2: pairwise uniformity AND delta bound.
        let fam = CombinedFamily::new(3, 2, 0.25, 2).unwrap();
        let total = 1u64 << fam.seed_len();
        for i in 0..3usize {
            for j in 0..3usize {
                if i == j {
                    continue;
                }
                let mut counts = [0u64; 4];
                for seed in enumerate_seeds(fam.seed_len()) {
                    let a = fam.evaluate(&seed, i).unwrap();
                    let b = fam.evaluate(&seed, j).unwrap();
                    counts[(a * 2 + b) as usize] += 1;
                }
                assert!(counts.iter().all(|&c| c == total / 4), "pairwise not uniform");
            }
        }
        // triple-index deviation bounded by delta
        let mut worst: f64 = 0.0;
        for pattern in 0..8u32 {
            let mut count = 0u64;
            for seed in enumerate_seeds(fam.seed_len()) {
                let ok = (0..3).all(|i| {
                    fam.evaluate(&seed, i).unwrap() == (pattern >> i) & 1
                });
                if ok {
                    count += 1;
                }
            }
            worst = worst.max((count as f64 / total as f64 - 0.125).abs());
        }
        assert!(worst <= 0.25 + 1e-12);
    }

    #[test]
    fn verify_spreading_identity_constant_and_even() {
        // identity hash, ell = 1: loads of 1, always true
        let ident: Vec<u32> = (0..8).collect();
        assert!(verify_spreading(&ident, 8, &(0..8).collect::<Vec<_>>(), 1));
        // constant hash, |I| = 8, ell = 2: load 8 > 4
        let along = vec![3u32; 8];
        assert!(!verify_spreading(&along, 8, &(0..8).collect::<Vec<_>>(), 2));
        // even split into m buckets, ell = m: equality case holds
        let even: Vec<u32> = (0..8).map(|i| i % 4).collect();
        assert!(verify_spreading(&even, 4, &(0..8).collect::<Vec<_>>(), 4));
    }
}
