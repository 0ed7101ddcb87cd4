//! Fourier coefficients E[exp(2 pi i alpha Z)] of integer or rational
//! valued test statistics, from exact tables or sampled generator output,
//! and the Fourier-gap-to-TV certificate.

use crate::analysis::dist::DistributionTable;
use crate::error::Result;
use crate::generator::Generator;
use crate::majority::WeightVector;
use crate::seed::Seed;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Compensated (Kahan) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }

    /// Merge of two compensated sums (order-independent up to rounding).
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(-other.carry);
    }
}

/// E[exp(2 pi i alpha Z)] of an exact table.
pub fn fourier_coeff_table(table: &DistributionTable, alpha: f64) -> Complex64 {
    let mut re = KahanSum::default();
    let mut im = KahanSum::default();
    for (s, m) in table.support().iter().zip(table.mass()) {
        let phase = TAU * alpha * s.to_f64().unwrap();
        let w = m.to_f64().unwrap();
        re.add(w * phase.cos());
        im.add(w * phase.sin());
    }
    Complex64::new(re.value(), im.value())
}

/// Plug-in estimate from integer samples.
pub fn fourier_coeff_samples(values: &[i64], alpha: f64) -> Complex64 {
    let mut re = KahanSum::default();
    let mut im = KahanSum::default();
    for &s in values {
        let phase = TAU * alpha * s as f64;
        re.add(phase.cos());
        im.add(phase.sin());
    }
    Complex64::new(re.value(), im.value()) / values.len() as f64
}

/// sqrt(2B) * gap: converts a max Fourier gap over the grid into a TV
/// certificate for supports of size at most B.
pub fn fourier_to_tv_bound(max_fourier_gap: f64, support_bound: usize) -> f64 {
    (2.0 * support_bound as f64).sqrt() * max_fourier_gap
}

/// Max |p^(alpha) - q^(alpha)| over the grid alpha = j/(2B+1), 0 <= j <= B.
/// For integer-supported tables whose union support fits in a window of
/// width <= 2B, the grid is exact for the Plancherel argument (conjugate
/// symmetry covers the other half).
pub fn grid_max_fourier_gap(p: &DistributionTable, q: &DistributionTable, b: usize) -> f64 {
    let grid_n = (2 * b + 1) as f64;
    (0..=b)
        .map(|j| {
            let alpha = j as f64 / grid_n;
            (fourier_coeff_table(p, alpha) - fourier_coeff_table(q, alpha)).norm()
        })
        .fold(0.0, f64::max)
}

/// Support-size bound B for the grid certificate: large enough that the
/// union support fits a window of width 2B and has at most 2B points.
pub fn grid_support_bound(p: &DistributionTable, q: &DistributionTable) -> usize {
    let count = p.len().max(q.len());
    let range = p
        .integer_range()
        .unwrap_or(0)
        .max(q.integer_range().unwrap_or(0)) as usize;
    count.max(range.div_ceil(2) + 1)
}

#[derive(Clone, Debug)]
pub struct FourierEstimate {
    pub alpha: f64,
    pub value: Complex64,
    /// standard error of the complex mean (values lie on the unit circle)
    pub std_error: f64,
    pub samples: u64,
}

/// Monte-Carlo estimate of E[exp(2 pi i alpha <v, G(y)>)] at several
/// frequencies over one shared stream of sampled seeds. Chunked so the
/// result is deterministic in `rng_seed` regardless of thread scheduling;
/// per-worker compensated sums are merged at the end.
pub fn sampled_fourier(
    g: &dyn Generator,
    v: &WeightVector,
    alphas: &[f64],
    samples: u64,
    rng_seed: u64,
) -> Result<Vec<FourierEstimate>> {
    let masks = v.signed_masks();
    let weights: Vec<f64> = v.entries().to_vec();
    let chunks: u64 = 256;
    let per_chunk = samples.div_ceil(chunks);
    let partials: Vec<Vec<(KahanSum, KahanSum)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
            rng.set_stream(c);
            let mut acc = vec![(KahanSum::default(), KahanSum::default()); alphas.len()];
            let count = per_chunk.min(samples.saturating_sub(c * per_chunk));
            for _ in 0..count {
                let seed = Seed::random(&mut rng, g.seed_len());
                let x = g.expand(&seed).expect("seed length is correct");
                let z = match &masks {
                    Some(m) => m.dot(&x) as f64,
                    None => x.dot(&weights),
                };
                for (slot, &alpha) in acc.iter_mut().zip(alphas) {
                    let phase = TAU * alpha * z;
                    slot.0.add(phase.cos());
                    slot.1.add(phase.sin());
                }
            }
            acc
        })
        .collect();
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(idx, &alpha)| {
            let mut re = KahanSum::default();
            let mut im = KahanSum::default();
            for p in &partials {
                re.merge(&p[idx].0);
                im.merge(&p[idx].1);
            }
            let mean = Complex64::new(re.value(), im.value()) / samples as f64;
            let var = (1.0 - mean.norm_sqr()).max(0.0);
            FourierEstimate {
                alpha,
                value: mean,
                std_error: (var / samples as f64).sqrt(),
                samples,
            }
        })
        .collect())
}
