//! Short-seed pseudorandom generators over {-1,+1}^n with verifiable
//! statistical guarantees, and the oracles to verify them at desk scale.
//!
//! Two generator stacks:
//!
//! * [`chernoff`]: a generator whose inner products with unit vectors obey
//!   sub-Gaussian tail bounds, built from iterated bucket-sign dimension
//!   reduction, per-bucket boosting, and seed recycling through a
//!   small-space program generator ([`inw`]).
//! * [`majority`]: a generator fooling every {0,±1}-weighted sum in total
//!   variation, combining a spreading-hash error amplifier with a
//!   k-wise-independence dimension-reduction recursion.
//!
//! Both sit on explicit small-bias strings ([`smallbias`]) and hash
//! families with declared bias/independence ([`hash`]). Everything is a
//! pure seeded map; [`analysis`] holds the exact distribution oracles,
//! Fourier and tail estimators, and diagnostics used by the experiment CLI
//! and the acceptance suite.

pub mod analysis;
pub mod chernoff;
pub mod descriptor;
pub mod error;
pub mod generator;
pub mod gf2;
pub mod hash;
pub mod inw;
pub mod majority;
pub mod seed;
pub mod sign;
pub mod smallbias;

pub use descriptor::Descriptor;
pub use error::{Error, Result};
pub use generator::{bias_wrap, symmetrize, xor_combine, Generator};
pub use majority::WeightVector;
pub use seed::Seed;
pub use sign::SignVector;
