//! Serializable construction trees. A descriptor pins every parameter of a
//! generator so that descriptor + seed reproduces outputs byte-for-byte.

use crate::chernoff::ChernoffParams;
use crate::error::{Error, Result};
use crate::generator::{symmetrize, xor_combine, ConstantPlus, Generator, UniformBits};
use crate::hash::{CombinedBits, KWiseBits};
use crate::inw::InwPrg;
use crate::majority::{BaseGenerator, LargeAlphaPrg, SmallAlphaPrg, SmallAlphaSchedule};
use crate::smallbias::EpsBiasedBits;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Descriptor {
    Uniform {
        n: usize,
    },
    ConstantPlus {
        n: usize,
    },
    XorCombine {
        left: Box<Descriptor>,
        right: Box<Descriptor>,
    },
    Symmetrize {
        inner: Box<Descriptor>,
    },
    EpsBiasedBits {
        n: usize,
        field_bits: u32,
        declared_bias: f64,
    },
    KWiseBits {
        n: usize,
        k: usize,
        field_bits: u32,
    },
    CombinedBits {
        n: usize,
        delta: f64,
        k: usize,
    },
    Inw {
        s_bits: u32,
        block_bits: usize,
        t_len: usize,
        eps: f64,
    },
    ChernoffRecursive {
        stage_sizes: Vec<usize>,
        stage_bias: f64,
    },
    ChernoffBucketed {
        inner: Box<Descriptor>,
        m_buckets: usize,
        hash_bias: f64,
    },
    ChernoffFinal {
        params: Box<ChernoffParams>,
    },
    MajorityLargeAlpha {
        n: usize,
        eps: f64,
        m: usize,
        spread_delta: f64,
        base: Box<Descriptor>,
    },
    MajoritySmallAlpha {
        schedule: Box<SmallAlphaSchedule>,
        base: Box<Descriptor>,
    },
}

impl Descriptor {
    pub fn type_name(&self) -> &'static str {
        match self {
            Descriptor::Uniform { .. } => "uniform",
            Descriptor::ConstantPlus { .. } => "constant_plus",
            Descriptor::XorCombine { .. } => "xor_combine",
            Descriptor::Symmetrize { .. } => "symmetrize",
            Descriptor::EpsBiasedBits { .. } => "eps_biased_bits",
            Descriptor::KWiseBits { .. } => "kwise_bits",
            Descriptor::CombinedBits { .. } => "combined_bits",
            Descriptor::Inw { .. } => "inw",
            Descriptor::ChernoffRecursive { .. } => "chernoff_recursive",
            Descriptor::ChernoffBucketed { .. } => "chernoff_bucketed",
            Descriptor::ChernoffFinal { .. } => "chernoff_final",
            Descriptor::MajorityLargeAlpha { .. } => "majority_large_alpha",
            Descriptor::MajoritySmallAlpha { .. } => "majority_small_alpha",
        }
    }

    /// Rebuilds the generator this descriptor came from.
    pub fn build(&self) -> Result<Arc<dyn Generator>> {
        Ok(match self {
            Descriptor::Uniform { n } => Arc::new(UniformBits::new(*n)),
            Descriptor::ConstantPlus { n } => Arc::new(ConstantPlus::new(*n)),
            Descriptor::XorCombine { left, right } => {
                Arc::new(xor_combine(left.build()?, right.build()?)?)
            }
            Descriptor::Symmetrize { inner } => Arc::new(symmetrize(inner.build()?)),
            Descriptor::EpsBiasedBits {
                n, declared_bias, ..
            } => Arc::new(EpsBiasedBits::new(*n, *declared_bias)?),
            Descriptor::KWiseBits { n, k, .. } => Arc::new(KWiseBits::new(*n, *k)?),
            Descriptor::CombinedBits { n, delta, k } => {
                Arc::new(CombinedBits::new(*n, *delta, *k)?)
            }
            Descriptor::Inw {
                s_bits,
                block_bits,
                t_len,
                eps,
            } => Arc::new(InwPrg::new(*s_bits, *block_bits, *t_len, *eps)?),
            Descriptor::ChernoffRecursive {
                stage_sizes,
                stage_bias,
            } => Arc::new(crate::chernoff::RecursivePrg::from_parts(
                stage_sizes.clone(),
                *stage_bias,
            )?),
            Descriptor::ChernoffBucketed {
                inner: _,
                m_buckets: _,
                hash_bias: _,
            } => {
                return Err(Error::Malformed(
                    "bucketed generators rebuild through chernoff_final descriptors".into(),
                ))
            }
            Descriptor::ChernoffFinal { params } => {
                Arc::new(crate::chernoff::final_prg_with(params.as_ref().clone())?)
            }
            Descriptor::MajorityLargeAlpha {
                n,
                eps,
                m,
                spread_delta,
                base,
            } => {
                let base = BaseGenerator::from_descriptor(base, 0.25)?;
                Arc::new(LargeAlphaPrg::from_parts(*n, *eps, *m, *spread_delta, base)?)
            }
            Descriptor::MajoritySmallAlpha { schedule, base } => {
                let base = BaseGenerator::from_descriptor(
                    base,
                    schedule.delta / schedule.n as f64,
                )?;
                Arc::new(SmallAlphaPrg::from_parts(schedule.as_ref().clone(), base)?)
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serialization is infallible")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Malformed(format!("bad descriptor: {e}")))
    }

    /// Stable FNV-1a hash of the canonical JSON encoding, carried on every
    /// report row.
    pub fn hash64(&self) -> u64 {
        let json = serde_json::to_string(self).expect("descriptor serialization is infallible");
        fnv1a(json.as_bytes())
    }
}

pub fn fnv1a(data: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;
    use rand::SeedableRng;

    #[test]
    fn descriptor_json_roundtrip_and_rebuild() {
        let g = crate::chernoff::final_prg(256, 0.01).unwrap();
        let d = g.descriptor();
        let d2 = Descriptor::from_json(&d.to_json()).unwrap();
        assert_eq!(d, d2);
        let rebuilt = d2.build().unwrap();
        assert_eq!(rebuilt.seed_len(), g.seed_len());
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let seed = Seed::random(&mut rng, g.seed_len());
        assert_eq!(rebuilt.expand(&seed).unwrap(), g.expand(&seed).unwrap());
    }

    #[test]
    fn hash64_is_stable_across_identical_descriptors() {
        let a = Descriptor::Uniform { n: 64 };
        let b = Descriptor::Uniform { n: 64 };
        assert_eq!(a.hash64(), b.hash64());
        assert_ne!(a.hash64(), Descriptor::Uniform { n: 65 }.hash64());
    }
}
