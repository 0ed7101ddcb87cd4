//! Exact oracles and statistical estimators: exact laws of weighted sign
//! sums, total-variation distance, Fourier coefficients, tail estimation
//! with exact binomial intervals, moment and load-balance diagnostics, the
//! cosine-product polynomial approximation, and stage-norm trajectories.

pub mod cosine;
pub mod dist;
pub mod fourier;
pub mod moments;
pub mod tails;
pub mod trajectory;

pub use cosine::{cosine_product_approx, CosineApproxInstance, CosineApproxResult};
pub use dist::{
    binomial_signed, exact_sum_distribution, tv_distance, tv_sampling_slack, DistributionTable,
    Provenance,
};
pub use fourier::{
    fourier_coeff_samples, fourier_coeff_table, fourier_to_tv_bound, grid_max_fourier_gap,
    sampled_fourier, FourierEstimate,
};
pub use moments::{hv_statistic, hv_moment_probe, l1_bucket_probe, MomentCheck};
pub use tails::{clopper_pearson, tail_probability, tail_probability_batch, TailEstimate};
pub use trajectory::{norm_trajectory, NormPoint};
