//! Seeded sign-string generators and the combinators shared by every
//! construction: coordinate-wise product of two generators, global-sign
//! symmetrization, and small-bias wrapping.

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::seed::{enumerate_seeds, Seed};
use crate::sign::SignVector;
use crate::smallbias::EpsBiasedBits;
use std::collections::HashMap;
use std::sync::Arc;

/// A pseudorandom generator: a pure map from `seed_len()`-bit seeds to
/// length-`output_len()` sign vectors. Implementations reject wrong-length
/// seeds rather than truncating.
pub trait Generator: Send + Sync {
    fn seed_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn expand(&self, seed: &Seed) -> Result<SignVector>;
    fn descriptor(&self) -> Descriptor;

    /// Free-form provenance string.
    fn label(&self) -> String {
        self.descriptor().type_name().to_string()
    }
}

pub(crate) fn check_seed(g: &dyn Generator, seed: &Seed) -> Result<()> {
    if seed.len() != g.seed_len() {
        return Err(Error::SeedLength {
            expected: g.seed_len(),
            got: seed.len(),
        });
    }
    Ok(())
}

/// Outputs the seed bits verbatim as signs (bit 0 -> +1). The maximally
/// random generator; also the base case of every recursion.
#[derive(Clone, Debug)]
pub struct UniformBits {
    n: usize,
}

impl UniformBits {
    pub fn new(n: usize) -> Self {
        UniformBits { n }
    }
}

impl Generator for UniformBits {
    fn seed_len(&self) -> usize {
        self.n
    }
    fn output_len(&self) -> usize {
        self.n
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        Ok(SignVector::from_seed_bits(seed))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::Uniform { n: self.n }
    }
}

/// Ignores its (empty) seed and outputs all +1.
#[derive(Clone, Debug)]
pub struct ConstantPlus {
    n: usize,
}

impl ConstantPlus {
    pub fn new(n: usize) -> Self {
        ConstantPlus { n }
    }
}

impl Generator for ConstantPlus {
    fn seed_len(&self) -> usize {
        0
    }
    fn output_len(&self) -> usize {
        self.n
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        Ok(SignVector::plus_ones(self.n))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::ConstantPlus { n: self.n }
    }
}

/// Coordinate-wise product of two generators on a split seed: the first
/// `g1.seed_len()` bits feed `g1`, the rest feed `g2`.
pub struct XorCombine {
    g1: Arc<dyn Generator>,
    g2: Arc<dyn Generator>,
}

/// Combines two generators of equal output length by coordinate-wise sign
/// product. Rejects mismatched output lengths.
pub fn xor_combine(g1: Arc<dyn Generator>, g2: Arc<dyn Generator>) -> Result<XorCombine> {
    if g1.output_len() != g2.output_len() {
        return Err(Error::DimensionMismatch(format!(
            "xor_combine needs equal output lengths, got {} and {}",
            g1.output_len(),
            g2.output_len()
        )));
    }
    Ok(XorCombine { g1, g2 })
}

impl Generator for XorCombine {
    fn seed_len(&self) -> usize {
        self.g1.seed_len() + self.g2.seed_len()
    }
    fn output_len(&self) -> usize {
        self.g1.output_len()
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        let s1 = seed.slice(0, self.g1.seed_len());
        let s2 = seed.slice(self.g1.seed_len(), self.g2.seed_len());
        Ok(self.g1.expand(&s1)?.product(&self.g2.expand(&s2)?))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::XorCombine {
            left: Box::new(self.g1.descriptor()),
            right: Box::new(self.g2.descriptor()),
        }
    }
}

/// Adds one seed bit that selects the global output sign, making the output
/// law exactly symmetric under negation. The extra bit is the last seed bit;
/// bit 0 keeps the inner output, bit 1 negates it.
pub struct Symmetrize {
    inner: Arc<dyn Generator>,
}

pub fn symmetrize(inner: Arc<dyn Generator>) -> Symmetrize {
    Symmetrize { inner }
}

impl Generator for Symmetrize {
    fn seed_len(&self) -> usize {
        self.inner.seed_len() + 1
    }
    fn output_len(&self) -> usize {
        self.inner.output_len()
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        let inner_seed = seed.slice(0, self.inner.seed_len());
        let out = self.inner.expand(&inner_seed)?;
        Ok(if seed.get(self.inner.seed_len()) {
            out.negated()
        } else {
            out
        })
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::Symmetrize {
            inner: Box::new(self.inner.descriptor()),
        }
    }
}

/// XORs the output with a fresh small-bias string, making the output
/// distribution `eps`-biased regardless of the wrapped generator.
pub fn bias_wrap(g: Arc<dyn Generator>, eps: f64) -> Result<XorCombine> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam(format!(
            "bias_wrap needs eps in (0,1), got {eps}"
        )));
    }
    let noise = EpsBiasedBits::new(g.output_len(), eps)?;
    xor_combine(g, Arc::new(noise))
}

/// Exact output law of a generator by exhaustive seed enumeration:
/// a map from output vector to the number of seeds producing it.
pub fn exhaustive_output_counts(g: &dyn Generator) -> Result<HashMap<SignVector, u64>> {
    let r = g.seed_len();
    if r > 24 {
        return Err(Error::Capacity(format!(
            "exhaustive enumeration over 2^{r} seeds refused (cap 2^24)"
        )));
    }
    let mut counts = HashMap::new();
    for seed in enumerate_seeds(r) {
        *counts.entry(g.expand(&seed)?).or_insert(0u64) += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_combine_products_and_rejects_mismatch() {
        let g1 = Arc::new(ConstantPlus::new(3));
        let g2 = Arc::new(UniformBits::new(3));
        let g = xor_combine(g1, g2.clone()).unwrap();
        let seed = Seed::from_u64(0b101, 3);
        // g1 output (+1,+1,+1), g2 output (-1,+1,-1) -> (-1,+1,-1)
        assert_eq!(
            g.expand(&seed).unwrap().to_signs(),
            vec![-1, 1, -1],
        );
        let bad = xor_combine(Arc::new(ConstantPlus::new(3)), Arc::new(UniformBits::new(4)));
        assert!(bad.is_err());
    }

    #[test]
    fn xor_combine_self_on_paired_seed_is_all_plus() {
        let g = Arc::new(UniformBits::new(5));
        let gg = xor_combine(g.clone(), g).unwrap();
        for v in [0u64, 7, 21, 31] {
            let half = Seed::from_u64(v, 5);
            let paired = half.concat(&half);
            assert_eq!(
                gg.expand(&paired).unwrap(),
                SignVector::plus_ones(5),
            );
        }
    }

    #[test]
    fn xor_combine_commutes_up_to_seed_swap() {
        let g1 = Arc::new(UniformBits::new(4));
        let g2 = Arc::new(Symmetrize {
            inner: Arc::new(UniformBits::new(4)),
        });
        let ab = xor_combine(g1.clone(), g2.clone()).unwrap();
        let ba = xor_combine(g2.clone(), g1.clone()).unwrap();
        for v in 0..(1u64 << ab.seed_len()) {
            let s = Seed::from_u64(v, ab.seed_len());
            let s1 = s.slice(0, g1.seed_len());
            let s2 = s.slice(g1.seed_len(), g2.seed_len());
            assert_eq!(
                ab.expand(&s).unwrap(),
                ba.expand(&s2.concat(&s1)).unwrap()
            );
        }
    }

    #[test]
    fn symmetrize_sign_bit() {
        let g = symmetrize(Arc::new(ConstantPlus::new(2)));
        assert_eq!(
            g.expand(&Seed::from_u64(0, 1)).unwrap().to_signs(),
            vec![1, 1]
        );
        assert_eq!(
            g.expand(&Seed::from_u64(1, 1)).unwrap().to_signs(),
            vec![-1, -1]
        );
    }

    #[test]
    fn symmetrized_law_is_exactly_negation_symmetric() {
        // 3-bit toy generator: uniform bits on 3 coordinates.
        let g = symmetrize(Arc::new(UniformBits::new(3)));
        let counts = exhaustive_output_counts(&g).unwrap();
        for (v, c) in &counts {
            assert_eq!(counts.get(&v.negated()), Some(c));
        }
    }

    #[test]
    fn wrong_seed_length_rejected() {
        let g = UniformBits::new(4);
        assert!(matches!(
            g.expand(&Seed::from_u64(0, 3)),
            Err(Error::SeedLength { .. })
        ));
    }
}
