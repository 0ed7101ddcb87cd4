//! Low-degree polynomial approximation of a product of cosines
//! prod_j cos(2 pi alpha S_j), factored through exp(-2 pi^2 alpha^2 T) with
//! truncated exponential corrections, plus the four-term error functional
//! the approximation is judged against.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::OnceLock;

/// Largest rational-arithmetic index of the log-cos expansion; the
/// evaluation degree cap keeps every instance within it.
pub const MAX_LOGCOS_INDEX: usize = 32;
pub const MAX_P: u32 = 64;
pub const MAX_M_TIMES_P: usize = 1 << 16;

/// Coefficients gamma_j of log cos(w) = sum_j gamma_j w^{2j}, exact
/// rationals via the tangent recurrence: t_1 = 1,
/// t_k = (sum_{a+b=k} t_a t_b) / (2k - 1), gamma_k = -t_k / (2k).
pub fn log_cos_gamma(j_max: usize) -> Vec<BigRational> {
    assert!(j_max <= MAX_LOGCOS_INDEX);
    let all = LOGCOS_TABLE.get_or_init(|| {
        let mut tan = vec![BigRational::one()]; // t_1
        for k in 2..=MAX_LOGCOS_INDEX {
            let sum: BigRational = (1..k).map(|a| &tan[a - 1] * &tan[k - a - 1]).sum();
            tan.push(sum / BigRational::from_integer(BigInt::from(2 * k as i64 - 1)));
        }
        tan.iter()
            .enumerate()
            .map(|(idx, t)| -t / BigRational::from_integer(BigInt::from(2 * (idx as i64 + 1))))
            .collect()
    });
    all[..j_max].to_vec()
}

static LOGCOS_TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();

/// c_j of log cos(2 pi z) = sum_j c_j z^{2j}, as f64 for evaluation.
pub fn log_cos_c(j_max: usize) -> Vec<f64> {
    log_cos_gamma(j_max)
        .iter()
        .enumerate()
        .map(|(idx, g)| g.to_f64().unwrap() * TAU.powi(2 * (idx as i32 + 1)))
        .collect()
}

/// Computed growth constant K with |c_j| <= K^j over the cached range.
pub fn log_cos_growth_constant() -> f64 {
    log_cos_c(MAX_LOGCOS_INDEX)
        .iter()
        .enumerate()
        .map(|(idx, c)| c.abs().powf(1.0 / (idx as f64 + 1.0)))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CosineApproxInstance {
    /// the m bucket sums S_1..S_m
    pub s: Vec<f64>,
    /// centering constant T (the approximation is exact around T = sum S^2)
    pub t_center: f64,
    pub alpha: f64,
    /// even degree budget >= 2
    pub p: u32,
}

impl CosineApproxInstance {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || self.p % 2 != 0 {
            return Err(Error::InvalidParam(format!(
                "degree budget p must be even and >= 2, got {}",
                self.p
            )));
        }
        if self.p > MAX_P || self.s.len() * self.p as usize > MAX_M_TIMES_P {
            return Err(Error::Capacity(format!(
                "instance size m*p = {} exceeds cap",
                self.s.len() * self.p as usize
            )));
        }
        Ok(())
    }

    /// per-factor truncation degrees p_j = ceil(p / (2j))
    pub fn p_j(&self, j: usize) -> u32 {
        self.p.div_ceil(2 * j as u32)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CosineApproxResult {
    pub approx_value: f64,
    pub true_value: f64,
    /// (alpha^2 |Delta|)^{p/2}, (alpha^2 |Delta|)^p,
    /// (sum (alpha S)^4)^{p/8}, (sum (alpha S)^4)^{p/2}
    pub error_terms: [f64; 4],
    pub bound_sum: f64,
    /// alpha^2 (sum S^2 - T)
    pub quad_stat: f64,
    /// sum (alpha S)^4
    pub quartic_stat: f64,
    pub max_alpha_s: f64,
}

/// Evaluates the degree-p approximation and the true cosine product.
pub fn cosine_product_approx(inst: &CosineApproxInstance) -> Result<CosineApproxResult> {
    inst.validate()?;
    let alpha = inst.alpha;
    let true_value: f64 = inst.s.iter().map(|&sj| (TAU * alpha * sj).cos()).product();

    let sum_sq: f64 = inst.s.iter().map(|&sj| sj * sj).sum();
    let delta = sum_sq - inst.t_center;
    let quad_stat = alpha * alpha * delta;
    let quartic_stat: f64 = inst.s.iter().map(|&sj| (alpha * sj).powi(4)).sum();
    let max_alpha_s = inst
        .s
        .iter()
        .map(|&sj| (alpha * sj).abs())
        .fold(0.0, f64::max);

    // truncated exponential series in -2 pi^2 alpha^2 Delta, p/2 terms
    let x = -2.0 * std::f64::consts::PI.powi(2) * quad_stat;
    let mut series = 0.0f64;
    let mut term = 1.0f64;
    for t in 0..inst.p / 2 {
        if t > 0 {
            term *= x / t as f64;
        }
        series += term;
    }

    // P: total-degree <= p truncation of the product over j >= 2 of the
    // truncated exponentials of c_j * u_j, where u_j = sum_i (alpha S_i)^{2j}
    // has formal degree 2j. Tracked by a degree-bucket DP.
    let p = inst.p as usize;
    let j_hi = (p / 2).saturating_sub(1);
    let mut by_degree = vec![0.0f64; p + 1];
    by_degree[0] = 1.0;
    if j_hi >= 2 {
        let c = log_cos_c(j_hi);
        for j in 2..=j_hi {
            let u_j: f64 = inst.s.iter().map(|&sj| (alpha * sj).powi(2 * j as i32)).sum();
            let cu = c[j - 1] * u_j;
            let p_j = inst.p_j(j) as usize;
            let mut next = vec![0.0f64; p + 1];
            for (d, &val) in by_degree.iter().enumerate() {
                if val == 0.0 {
                    continue;
                }
                let mut factor = 1.0f64;
                for t in 0..p_j {
                    let deg = d + 2 * j * t;
                    if deg > p {
                        break;
                    }
                    if t > 0 {
                        factor *= cu / t as f64;
                    }
                    next[deg] += val * factor;
                }
            }
            by_degree = next;
        }
    }
    let poly: f64 = by_degree.iter().sum();

    let lead = (-2.0 * std::f64::consts::PI.powi(2) * alpha * alpha * inst.t_center).exp();
    let approx_value = lead * series * poly;

    let q = quad_stat.abs();
    let error_terms = [
        q.powf(inst.p as f64 / 2.0),
        q.powf(inst.p as f64),
        quartic_stat.powf(inst.p as f64 / 8.0),
        quartic_stat.powf(inst.p as f64 / 2.0),
    ];
    Ok(CosineApproxResult {
        approx_value,
        true_value,
        error_terms,
        bound_sum: error_terms.iter().sum(),
        quad_stat,
        quartic_stat,
        max_alpha_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_coefficients_match_known_values() {
        // log cos w = -w^2/2 - w^4/12 - w^6/45 - 17 w^8/2520 - ...
        let g = log_cos_gamma(4);
        let expect = [(-1i64, 2u64), (-1, 12), (-1, 45), (-17, 2520)];
        for (got, (num, den)) in g.iter().zip(expect) {
            let want = BigRational::new(BigInt::from(num), BigInt::from(den));
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn growth_constant_is_finite_and_bounds_coefficients() {
        let k = log_cos_growth_constant();
        assert!(k.is_finite() && k > 1.0);
        for (idx, c) in log_cos_c(MAX_LOGCOS_INDEX).iter().enumerate() {
            assert!(c.abs() <= k.powi(idx as i32 + 1) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn log_cos_series_actually_converges_to_log_cos() {
        let c = log_cos_c(12);
        for z in [0.01f64, 0.03, 0.05] {
            let series: f64 = c
                .iter()
                .enumerate()
                .map(|(idx, cj)| cj * z.powi(2 * (idx as i32 + 1)))
                .sum();
            let direct = (TAU * z).cos().ln();
            assert!((series - direct).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn alpha_zero_is_exact() {
        let inst = CosineApproxInstance {
            s: vec![0.7, -1.3, 2.0],
            t_center: 5.0,
            alpha: 0.0,
            p: 8,
        };
        let r = cosine_product_approx(&inst).unwrap();
        assert_eq!(r.true_value, 1.0);
        assert_eq!(r.approx_value, 1.0);
        assert_eq!(r.error_terms, [0.0; 4]);
    }

    #[test]
    fn single_small_cosine_is_recovered_to_high_accuracy() {
        let inst = CosineApproxInstance {
            s: vec![1.0],
            t_center: 1.0,
            alpha: 1e-3,
            p: 8,
        };
        let r = cosine_product_approx(&inst).unwrap();
        assert!((r.approx_value - (TAU * 1e-3).cos()).abs() <= 1e-12);
    }

    #[test]
    fn error_decays_with_degree_on_smooth_instances() {
        let s = vec![0.9, -0.4, 1.1, 0.3];
        let sum_sq: f64 = s.iter().map(|x| x * x).sum();
        let alpha = 0.02;
        let mut prev = f64::INFINITY;
        for p in [4u32, 8, 12] {
            let inst = CosineApproxInstance {
                s: s.clone(),
                t_center: sum_sq + 0.5,
                alpha,
                p,
            };
            let r = cosine_product_approx(&inst).unwrap();
            assert!(r.quad_stat.abs() < 0.01 && r.quartic_stat < 0.01);
            let err = (r.approx_value - r.true_value).abs();
            assert!(err <= prev * 1.5 + 1e-15, "p={p}: {err} vs {prev}");
            assert!(err <= r.bound_sum * 50.0, "bound shape holds loosely");
            prev = err;
        }
    }

    #[test]
    fn odd_degree_rejected() {
        let inst = CosineApproxInstance {
            s: vec![1.0],
            t_center: 1.0,
            alpha: 0.1,
            p: 5,
        };
        assert!(cosine_product_approx(&inst).is_err());
    }
}
