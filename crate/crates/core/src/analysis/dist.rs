//! Exact and empirical probability tables over the rational support of
//! weighted sign sums, and total-variation distance between them.

use crate::error::{Error, Result};
use crate::majority::WeightVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Exact,
    Empirical { samples: u64 },
}

/// Probability mass over a sorted rational support. Masses are exact
/// rationals so exhaustive-enumeration tables compare bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    support: Vec<BigRational>,
    mass: Vec<BigRational>,
    provenance: Provenance,
}

impl DistributionTable {
    pub fn from_rational_pairs(
        pairs: Vec<(BigRational, BigRational)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut map: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for (s, m) in pairs {
            if m.is_negative() {
                return Err(Error::InvalidParam("negative mass".into()));
            }
            if m.is_zero() {
                continue;
            }
            *map.entry(s).or_insert_with(BigRational::zero) += m;
        }
        let total: BigRational = map.values().cloned().sum();
        let dev = (total - BigRational::one())
            .to_f64()
            .map(f64::abs)
            .unwrap_or(f64::INFINITY);
        if dev > 1e-12 {
            return Err(Error::InvalidParam(format!(
                "masses sum to 1 within 1e-12 required (off by {dev:.3e})"
            )));
        }
        let (support, mass) = map.into_iter().unzip();
        Ok(DistributionTable {
            support,
            mass,
            provenance,
        })
    }

    /// Empirical table from integer-valued sample counts.
    pub fn from_integer_counts(counts: &BTreeMap<i64, u64>, total: u64) -> Result<Self> {
        if total == 0 || counts.values().sum::<u64>() != total {
            return Err(Error::InvalidParam("counts must sum to the sample total".into()));
        }
        let denom = BigInt::from(total);
        let pairs = counts
            .iter()
            .map(|(&s, &c)| {
                (
                    BigRational::from_integer(BigInt::from(s)),
                    BigRational::new(BigInt::from(c), denom.clone()),
                )
            })
            .collect();
        DistributionTable::from_rational_pairs(pairs, Provenance::Empirical { samples: total })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[BigRational] {
        &self.support
    }

    pub fn mass(&self) -> &[BigRational] {
        &self.mass
    }

    pub fn support_f64(&self) -> Vec<f64> {
        self.support.iter().map(|s| s.to_f64().unwrap()).collect()
    }

    pub fn mass_f64(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m.to_f64().unwrap()).collect()
    }

    pub fn is_integer_supported(&self) -> bool {
        self.support.iter().all(|s| s.is_integer())
    }

    /// (value, mass) pairs for integer-supported tables, masses as f64.
    pub fn integer_masses(&self) -> Vec<(i64, f64)> {
        self.support
            .iter()
            .zip(&self.mass)
            .map(|(s, m)| {
                (
                    s.to_integer().to_i64().expect("integer support fits i64"),
                    m.to_f64().unwrap(),
                )
            })
            .collect()
    }

    /// Pr[Z ≡ class (mod modulus)] for integer-supported tables.
    pub fn mod_class_prob(&self, modulus: i64, class: i64) -> f64 {
        assert!(modulus >= 1);
        self.integer_masses()
            .iter()
            .filter(|(s, _)| s.rem_euclid(modulus) == class.rem_euclid(modulus))
            .map(|(_, m)| m)
            .sum()
    }

    /// Pr[|Z| >= t].
    pub fn two_sided_tail(&self, t: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.mass)
            .filter(|(s, _)| s.to_f64().unwrap().abs() >= t)
            .map(|(_, m)| m.to_f64().unwrap())
            .sum()
    }

    /// Width of the integer support window (max - min), for grid sizing.
    pub fn integer_range(&self) -> Option<i64> {
        if !self.is_integer_supported() || self.support.is_empty() {
            return None;
        }
        let lo = self.support.first().unwrap().to_integer().to_i64()?;
        let hi = self.support.last().unwrap().to_integer().to_i64()?;
        Some(hi - lo)
    }
}

/// Exact half-l1 distance between two tables on their unioned support.
pub fn tv_distance(p: &DistributionTable, q: &DistributionTable) -> f64 {
    let mut i = 0;
    let mut j = 0;
    let mut acc = BigRational::zero();
    while i < p.support.len() || j < q.support.len() {
        let which = match (p.support.get(i), q.support.get(j)) {
            (Some(a), Some(b)) => a.cmp(b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => unreachable!(),
        };
        match which {
            std::cmp::Ordering::Less => {
                acc += p.mass[i].abs();
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                acc += q.mass[j].abs();
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                acc += (&p.mass[i] - &q.mass[j]).abs();
                i += 1;
                j += 1;
            }
        }
    }
    (acc / BigRational::from_integer(BigInt::from(2)))
        .to_f64()
        .unwrap()
}

/// Upward bias allowance for a plug-in TV estimate from `samples` draws
/// against the exact `oracle`: three times half the summed binomial
/// standard errors over the oracle support.
pub fn tv_sampling_slack(oracle: &DistributionTable, samples: u64) -> f64 {
    let n = samples as f64;
    1.5 * oracle
        .mass_f64()
        .iter()
        .map(|&q| (q * (1.0 - q) / n).sqrt())
        .sum::<f64>()
        + 1e-9
}

/// Law of 2*Bin(k, 1/2) - k: the exact distribution of a {0,±1} test with
/// support size k against uniform signs. Cached per k.
pub fn binomial_signed(k: usize) -> Arc<DistributionTable> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DistributionTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&k) {
        return t.clone();
    }
    let denom = BigInt::one() << k;
    let mut coeff = BigInt::one();
    let mut pairs = Vec::with_capacity(k + 1);
    for j in 0..=k {
        pairs.push((
            BigRational::from_integer(BigInt::from(2 * j as i64 - k as i64)),
            BigRational::new(coeff.clone(), denom.clone()),
        ));
        if j < k {
            coeff = coeff * BigInt::from((k - j) as u64) / BigInt::from(j as u64 + 1);
        }
    }
    let table = Arc::new(
        DistributionTable::from_rational_pairs(pairs, Provenance::Exact)
            .expect("binomial masses sum to one"),
    );
    cache.lock().unwrap().insert(k, table.clone());
    table
}

const CONVOLUTION_SUPPORT_CAP: usize = 2_000_000;

/// Exact law of <v, X> under uniform X: the shifted binomial for {0,±1}
/// vectors at any length, sequential rational convolution otherwise
/// (support at most 40 nonzero coordinates; every f64 is a dyadic rational,
/// so the conversion is lossless).
pub fn exact_sum_distribution(v: &WeightVector) -> Result<DistributionTable> {
    if v.is_signed_alphabet() {
        return Ok(binomial_signed(v.l0()).as_ref().clone());
    }
    let nonzero: Vec<f64> = v.entries().iter().copied().filter(|&x| x != 0.0).collect();
    if nonzero.len() > 40 {
        return Err(Error::Capacity(format!(
            "exact rational mode supports l0 <= 40, got {}",
            nonzero.len()
        )));
    }
    let mut acc: BTreeMap<BigRational, u128> = BTreeMap::new();
    acc.insert(BigRational::zero(), 1);
    for &w in &nonzero {
        let wq = BigRational::from_float(w)
            .ok_or_else(|| Error::InvalidParam(format!("non-finite weight {w}")))?;
        let mut next: BTreeMap<BigRational, u128> = BTreeMap::new();
        for (s, c) in &acc {
            *next.entry(s + &wq).or_insert(0) += c;
            *next.entry(s - &wq).or_insert(0) += c;
        }
        if next.len() > CONVOLUTION_SUPPORT_CAP {
            return Err(Error::Capacity(format!(
                "support exceeded cap {CONVOLUTION_SUPPORT_CAP}"
            )));
        }
        acc = next;
    }
    let denom = BigInt::one() << nonzero.len();
    let pairs = acc
        .into_iter()
        .map(|(s, c)| (s, BigRational::new(BigInt::from(c), denom.clone())))
        .collect();
    DistributionTable::from_rational_pairs(pairs, Provenance::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_of(pairs: &[(i64, f64)]) -> DistributionTable {
        let p = pairs
            .iter()
            .map(|&(s, m)| {
                (
                    BigRational::from_integer(BigInt::from(s)),
                    BigRational::from_float(m).unwrap(),
                )
            })
            .collect();
        DistributionTable::from_rational_pairs(p, Provenance::Exact).unwrap()
    }

    #[test]
    fn single_and_double_coordinate_laws() {
        let one = exact_sum_distribution(&WeightVector::new(vec![1.0])).unwrap();
        assert_eq!(one.integer_masses(), vec![(-1, 0.5), (1, 0.5)]);
        let two = exact_sum_distribution(&WeightVector::new(vec![1.0, 1.0])).unwrap();
        assert_eq!(two.integer_masses(), vec![(-2, 0.25), (0, 0.5), (2, 0.25)]);
    }

    #[test]
    fn all_agree_probability_is_two_to_minus_k() {
        for k in [1usize, 3, 7] {
            let v = WeightVector::new(
                (0..10)
                    .map(|i| if i < k { 1.0 } else { 0.0 })
                    .collect::<Vec<_>>(),
            );
            let t = exact_sum_distribution(&v).unwrap();
            let at_k = t
                .integer_masses()
                .iter()
                .find(|(s, _)| *s == k as i64)
                .unwrap()
                .1;
            assert!((at_k - 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn general_weights_convolve_exactly() {
        let v = WeightVector::new(vec![0.5, 0.25]);
        let t = exact_sum_distribution(&v).unwrap();
        let sup = t.support_f64();
        assert_eq!(sup, vec![-0.75, -0.25, 0.25, 0.75]);
        assert!(t.mass_f64().iter().all(|&m| (m - 0.25).abs() < 1e-15));
    }

    #[test]
    fn tv_metric_basics() {
        let p = table_of(&[(0, 0.5), (1, 0.5)]);
        let q = table_of(&[(0, 1.0)]);
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert!((tv_distance(&p, &q) - 0.5).abs() < 1e-15);
        let disjoint = table_of(&[(5, 1.0)]);
        assert!((tv_distance(&p, &disjoint) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tv_is_a_metric_on_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        for _ in 0..20 {
            let mk = |rng: &mut rand_chacha::ChaCha12Rng| {
                let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                let mut pairs: Vec<(i64, f64)> =
                    raw.iter().enumerate().map(|(i, &m)| (i as i64, m / sum)).collect();
                // push tiny residual into the last entry so masses sum to 1
                let total: f64 = pairs.iter().map(|p| p.1).sum();
                pairs.last_mut().unwrap().1 += 1.0 - total;
                table_of(&pairs)
            };
            let (p, q, r) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let (pq, qr, pr) = (tv_distance(&p, &q), tv_distance(&q, &r), tv_distance(&p, &r));
            assert!(pq >= 0.0 && pq <= 1.0);
            assert!((tv_distance(&p, &q) - tv_distance(&q, &p)).abs() < 1e-15);
            assert!(pr <= pq + qr + 1e-12, "triangle inequality");
        }
    }

    #[test]
    fn binomial_matches_convolution() {
        // weights 0.5 take the rational-convolution path; the law is the
        // shifted binomial scaled by 1/2
        let v = WeightVector::new(vec![0.5; 5]);
        let conv = exact_sum_distribution(&v).unwrap();
        let direct = binomial_signed(5);
        let sup: Vec<f64> = conv.support_f64().iter().map(|s| s * 2.0).collect();
        let dsup: Vec<f64> = direct.integer_masses().iter().map(|&(s, _)| s as f64).collect();
        assert_eq!(sup, dsup);
        for (a, (_, b)) in conv.mass_f64().iter().zip(direct.integer_masses()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_counts_table() {
        let mut counts = BTreeMap::new();
        counts.insert(-1i64, 40u64);
        counts.insert(1, 60);
        let t = DistributionTable::from_integer_counts(&counts, 100).unwrap();
        assert_eq!(t.provenance(), &Provenance::Empirical { samples: 100 });
        let q = binomial_signed(1);
        assert!((tv_distance(&t, &q) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mod_class_probabilities() {
        let t = binomial_signed(4);
        let total: f64 = (0..3).map(|c| t.mod_class_prob(3, c)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // support {-4,-2,0,2,4}: class 0 mod 2 has everything
        assert!((t.mod_class_prob(2, 0) - 1.0).abs() < 1e-12);
    }
}
