//! Tail-probability estimation with exact (Clopper-Pearson) binomial
//! confidence intervals, in sampled and exhaustive modes.

use crate::error::Result;
use crate::generator::Generator;
use crate::seed::{enumerate_seeds, Seed};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EXHAUSTIVE_SEED_BITS: usize = 22;

/// <w, x> with eight independent accumulator lanes folded at the end;
/// signs enter branchlessly by xoring the IEEE sign bit, so each term is
/// exact and the loop vectorizes.
pub fn dot_packed(w: &[f64], x: &crate::sign::SignVector) -> f64 {
    debug_assert_eq!(w.len(), x.len());
    let words = x.words();
    let mut lanes = [0.0f64; 8];
    let mut i = 0usize;
    while i + 8 <= w.len() {
        let byte = (words[i / 64] >> (i % 64)) & 0xff;
        for j in 0..8 {
            let flip = ((byte >> j) & 1) << 63;
            lanes[j] += f64::from_bits(w[i + j].to_bits() ^ flip);
        }
        i += 8;
    }
    let mut acc = lanes.iter().sum::<f64>();
    while i < w.len() {
        acc += w[i] * x.sign(i) as f64;
        i += 1;
    }
    acc
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TailEstimate {
    pub t: f64,
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// true when the estimate is an exact probability over all seeds
    pub exact: bool,
    pub confidence: f64,
}

/// Monte-Carlo (or exhaustive, when the seed space is at most 2^22)
/// estimate of Pr[|<w, G(y)>| >= t].
pub fn tail_probability(
    g: &dyn Generator,
    w: &[f64],
    t: f64,
    samples: u64,
    rng_seed: u64,
) -> Result<TailEstimate> {
    let grid = tail_probability_batch(g, &[w.to_vec()], &[t], samples, rng_seed)?;
    Ok(grid.into_iter().next().unwrap().into_iter().next().unwrap())
}

/// Shared-sample estimates for several weight vectors and thresholds at
/// once: each sampled output is expanded once and dotted with every vector.
/// Deterministic in `rng_seed` (fixed chunking, per-chunk streams).
pub fn tail_probability_batch(
    g: &dyn Generator,
    vectors: &[Vec<f64>],
    ts: &[f64],
    samples: u64,
    rng_seed: u64,
) -> Result<Vec<Vec<TailEstimate>>> {
    for w in vectors {
        assert_eq!(w.len(), g.output_len(), "weight vector length mismatch");
    }
    let exhaustive = g.seed_len() <= EXHAUSTIVE_SEED_BITS;
    let (hits, total) = if exhaustive {
        let mut hits = vec![vec![0u64; ts.len()]; vectors.len()];
        for seed in enumerate_seeds(g.seed_len()) {
            let x = g.expand(&seed)?;
            for (vi, w) in vectors.iter().enumerate() {
                let dot = dot_packed(w, &x);
                for (ti, &t) in ts.iter().enumerate() {
                    if dot.abs() >= t {
                        hits[vi][ti] += 1;
                    }
                }
            }
        }
        (hits, 1u64 << g.seed_len())
    } else {
        let chunks: u64 = 256;
        let per_chunk = samples.div_ceil(chunks);
        let partials: Vec<Vec<Vec<u64>>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
                rng.set_stream(c);
                let mut hits = vec![vec![0u64; ts.len()]; vectors.len()];
                let count = per_chunk.min(samples.saturating_sub(c * per_chunk));
                for _ in 0..count {
                    let seed = Seed::random(&mut rng, g.seed_len());
                    let x = g.expand(&seed).expect("seed length is correct");
                    for (vi, w) in vectors.iter().enumerate() {
                        let dot = dot_packed(w, &x);
                        for (ti, &t) in ts.iter().enumerate() {
                            if dot.abs() >= t {
                                hits[vi][ti] += 1;
                            }
                        }
                    }
                }
                hits
            })
            .collect();
        let mut hits = vec![vec![0u64; ts.len()]; vectors.len()];
        for p in partials {
            for (hv, pv) in hits.iter_mut().zip(p) {
                for (h, q) in hv.iter_mut().zip(pv) {
                    *h += q;
                }
            }
        }
        (hits, samples)
    };
    let confidence = 0.99;
    Ok(hits
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(ts)
                .map(|(h, &t)| {
                    let estimate = h as f64 / total as f64;
                    let (ci_low, ci_high) = if exhaustive {
                        (estimate, estimate)
                    } else {
                        clopper_pearson(h, total, confidence)
                    };
                    TailEstimate {
                        t,
                        hits: h,
                        samples: total,
                        estimate,
                        ci_low,
                        ci_high,
                        exact: exhaustive,
                        confidence,
                    }
                })
                .collect()
        })
        .collect())
}

/// Exact binomial (Clopper-Pearson) two-sided interval at the given
/// confidence level.
pub fn clopper_pearson(hits: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(hits <= n && n > 0);
    let alpha = 1.0 - confidence;
    let lo = if hits == 0 {
        0.0
    } else {
        inv_reg_beta(alpha / 2.0, hits as f64, (n - hits) as f64 + 1.0)
    };
    let hi = if hits == n {
        1.0
    } else {
        inv_reg_beta(1.0 - alpha / 2.0, hits as f64 + 1.0, (n - hits) as f64)
    };
    (lo, hi)
}

/// Regularized incomplete beta I_x(a, b) by continued fraction.
pub fn reg_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    // Lentz's algorithm for the standard continued fraction
    let tiny = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation (g = 7, n = 9)
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

fn inv_reg_beta(p: f64, a: f64, b: f64) -> f64 {
    // bisection: reg_beta is monotone in x
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reg_beta(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::UniformBits;

    #[test]
    fn t_zero_is_always_hit() {
        let g = UniformBits::new(8);
        let w = vec![0.25; 8];
        let est = tail_probability(&g, &w, 0.0, 10, 1).unwrap();
        assert!(est.exact);
        assert_eq!(est.estimate, 1.0);
    }

    #[test]
    fn unreachable_threshold_never_hit() {
        let g = UniformBits::new(8);
        let w = vec![0.25; 8];
        let l1: f64 = w.iter().sum();
        let est = tail_probability(&g, &w, l1 + 0.5, 10, 1).unwrap();
        assert_eq!(est.estimate, 0.0);
    }

    #[test]
    fn exhaustive_matches_binomial_oracle() {
        // uniform generator, unit weights: Pr[|sum| >= t] from the binomial
        let g = UniformBits::new(10);
        let w = vec![1.0; 10];
        let est = tail_probability(&g, &w, 4.0, 10, 1).unwrap();
        let oracle = crate::analysis::dist::binomial_signed(10).two_sided_tail(4.0);
        assert!(est.exact);
        assert!((est.estimate - oracle).abs() < 1e-12);
    }

    #[test]
    fn reg_beta_sanity() {
        // I_x(1,1) = x
        for x in [0.1, 0.5, 0.9] {
            assert!((reg_beta(x, 1.0, 1.0) - x).abs() < 1e-10);
        }
        // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
        let v = reg_beta(0.3, 4.0, 7.0) + reg_beta(0.7, 7.0, 4.0);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn clopper_pearson_covers_point_estimate() {
        let (lo, hi) = clopper_pearson(13, 100, 0.99);
        assert!(lo < 0.13 && 0.13 < hi);
        let (lo, hi) = clopper_pearson(0, 50, 0.99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.2);
        let (lo, hi) = clopper_pearson(50, 50, 0.99);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.8);
    }

    #[test]
    fn batch_shares_samples_consistently() {
        let g = UniformBits::new(30); // beyond exhaustive cap
        let w1 = vec![1.0; 30];
        let w2 = vec![0.5; 30];
        let grid =
            tail_probability_batch(&g, &[w1.clone(), w2], &[2.0, 4.0], 20_000, 7).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[0].len(), 2);
        // same vector, smaller threshold: at least as many hits
        assert!(grid[0][0].hits >= grid[0][1].hits);
        // determinism
        let again = tail_probability_batch(&g, &[w1], &[2.0, 4.0], 20_000, 7).unwrap();
        assert_eq!(again[0][0].hits, grid[0][0].hits);
    }
}
