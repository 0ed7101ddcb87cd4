//! Read-once branching programs, the recursive seed-recycling generator for
//! them, and the halfspace-to-ROBP compiler used to replace independent
//! bucket seeds with one short seed.
//!
//! The per-level mixing map is an affine Toeplitz map h(x) = Mx + b over
//! GF(2)^B: exactly pairwise independent for any block width, seeded by
//! 3B - 1 bits, and evaluable as the middle coefficients of a carry-less
//! polynomial product.

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::generator::{check_seed, Generator};
use crate::gf2::clmul64;
use crate::seed::Seed;
use crate::sign::SignVector;
use serde::{Deserialize, Serialize};

/// y = Toeplitz(c) * x over GF(2), where c holds 2B-1 diagonal bits and x
/// holds B bits. Row i of the matrix is c[i .. i+B] reversed, which makes
/// y equal to coefficients [B-1, 2B-1) of the polynomial product c(z)x(z).
pub fn toeplitz_apply(c_words: &[u64], x_words: &[u64], b_bits: usize) -> Vec<u64> {
    let wc = (2 * b_bits - 1).div_ceil(64);
    let wx = b_bits.div_ceil(64);
    let mut acc = vec![0u64; wc + wx + 1];
    #[cfg(target_arch = "x86_64")]
    {
        if crate::gf2::have_pclmul() {
            // SAFETY: feature presence checked above.
            unsafe { poly_mul_acc_hw(&mut acc, &c_words[..wc], &x_words[..wx]) };
        } else {
            poly_mul_acc_soft(&mut acc, &c_words[..wc], &x_words[..wx]);
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    poly_mul_acc_soft(&mut acc, &c_words[..wc], &x_words[..wx]);
    // extract bits [b_bits-1, 2*b_bits-1)
    let start = b_bits - 1;
    let mut out = vec![0u64; wx];
    for (k, slot) in out.iter_mut().enumerate() {
        let bit = start + 64 * k;
        let w = bit / 64;
        let off = bit % 64;
        let mut v = acc[w] >> off;
        if off != 0 && w + 1 < acc.len() {
            v |= acc[w + 1] << (64 - off);
        }
        *slot = v;
    }
    let rem = b_bits % 64;
    if rem != 0 {
        out[wx - 1] &= (1u64 << rem) - 1;
    }
    out
}

fn poly_mul_acc_soft(acc: &mut [u64], c_words: &[u64], x_words: &[u64]) {
    for (i, &cw) in c_words.iter().enumerate() {
        if cw == 0 {
            continue;
        }
        for (j, &xw) in x_words.iter().enumerate() {
            if xw == 0 {
                continue;
            }
            let p = clmul64(cw, xw);
            acc[i + j] ^= p as u64;
            acc[i + j + 1] ^= (p >> 64) as u64;
        }
    }
}

/// SAFETY: requires the pclmulqdq CPU feature (checked by the caller).
#[cfg(target_arch = "x86_64")]
#[inline]
unsafe fn poly_mul_acc_hw(acc: &mut [u64], c_words: &[u64], x_words: &[u64]) {
    for (i, &cw) in c_words.iter().enumerate() {
        if cw == 0 {
            continue;
        }
        for (j, &xw) in x_words.iter().enumerate() {
            if xw == 0 {
                continue;
            }
            let p = crate::gf2::clmul64_hw(cw, xw);
            acc[i + j] ^= p as u64;
            acc[i + j + 1] ^= (p >> 64) as u64;
        }
    }
}

/// A (S, D, T)-read-once branching program with dense transition tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Robp {
    pub s_bits: u32,
    pub d_bits: u32,
    pub t_len: usize,
    /// layers[t][state * 2^D + block] = next state
    pub layers: Vec<Vec<u32>>,
    pub start: u32,
    pub accepting: Vec<bool>,
}

impl Robp {
    pub fn states(&self) -> usize {
        1usize << self.s_bits
    }

    pub fn blocks_per_layer(&self) -> usize {
        1usize << self.d_bits
    }

    pub fn validate(&self) -> Result<()> {
        let states = self.states() as u32;
        if self.layers.len() != self.t_len {
            return Err(Error::Malformed("layer count != T".into()));
        }
        if self.accepting.len() != self.states() {
            return Err(Error::Malformed("accepting set size != state count".into()));
        }
        for layer in &self.layers {
            if layer.len() != self.states() * self.blocks_per_layer() {
                return Err(Error::Malformed("transition table size mismatch".into()));
            }
            if layer.iter().any(|&s| s >= states) {
                return Err(Error::Malformed("transition to invalid state".into()));
            }
        }
        if self.start >= states {
            return Err(Error::Malformed("invalid start state".into()));
        }
        Ok(())
    }

    /// Runs the program on `t_len` blocks, reading each exactly once in order.
    pub fn eval(&self, blocks: &[u64]) -> Result<bool> {
        if blocks.len() != self.t_len {
            return Err(Error::Malformed(format!(
                "expected {} input blocks, got {}",
                self.t_len,
                blocks.len()
            )));
        }
        let bpl = self.blocks_per_layer() as u64;
        let mut state = self.start as usize;
        for (layer, &block) in self.layers.iter().zip(blocks) {
            debug_assert!(block < bpl);
            state = layer[(state as u64 * bpl + block) as usize] as usize;
        }
        Ok(self.accepting[state])
    }

    /// Reads T*D bits (little-endian within each block) from a seed.
    pub fn eval_bits(&self, bits: &Seed) -> Result<bool> {
        let d = self.d_bits as usize;
        if bits.len() != self.t_len * d {
            return Err(Error::Malformed(format!(
                "expected {} input bits, got {}",
                self.t_len * d,
                bits.len()
            )));
        }
        let blocks: Vec<u64> = (0..self.t_len).map(|t| bits.read_u64(t * d, d)).collect();
        self.eval(&blocks)
    }

    /// Exact acceptance probability under uniform input, by forward
    /// state-distribution propagation. Checks mass conservation per layer.
    pub fn uniform_acceptance(&self) -> f64 {
        let mut dist = vec![0.0f64; self.states()];
        dist[self.start as usize] = 1.0;
        let bpl = self.blocks_per_layer();
        let w = 1.0 / bpl as f64;
        for layer in &self.layers {
            let mut next = vec![0.0f64; self.states()];
            for (s, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for b in 0..bpl {
                    next[layer[s * bpl + b] as usize] += p * w;
                }
            }
            debug_assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            dist = next;
        }
        dist.iter()
            .zip(&self.accepting)
            .filter(|(_, &a)| a)
            .map(|(p, _)| p)
            .sum()
    }

    /// Compact binary encoding: magic, header, tables, accepting bitmap.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"ROBPBIN1");
        for v in [self.s_bits, self.d_bits, self.t_len as u32, self.start] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for layer in &self.layers {
            for &tr in layer {
                out.extend_from_slice(&tr.to_le_bytes());
            }
        }
        let mut byte = 0u8;
        for (i, &a) in self.accepting.iter().enumerate() {
            if a {
                byte |= 1 << (i % 8);
            }
            if i % 8 == 7 || i == self.accepting.len() - 1 {
                out.push(byte);
                byte = 0;
            }
        }
        out
    }

    pub fn from_binary(data: &[u8]) -> Result<Robp> {
        let err = || Error::Malformed("truncated ROBP binary".into());
        if data.len() < 24 || &data[..8] != b"ROBPBIN1" {
            return Err(Error::Malformed("bad ROBP magic".into()));
        }
        let rd = |off: usize| -> u32 { u32::from_le_bytes(data[off..off + 4].try_into().unwrap()) };
        let (s_bits, d_bits, t_len, start) = (rd(8), rd(12), rd(16) as usize, rd(20));
        let states = 1usize << s_bits;
        let bpl = 1usize << d_bits;
        let mut off = 24;
        let mut layers = Vec::with_capacity(t_len);
        for _ in 0..t_len {
            let mut layer = Vec::with_capacity(states * bpl);
            for _ in 0..states * bpl {
                if off + 4 > data.len() {
                    return Err(err());
                }
                layer.push(rd(off));
                off += 4;
            }
            layers.push(layer);
        }
        let mut accepting = Vec::with_capacity(states);
        for i in 0..states {
            let byte = *data.get(off + i / 8).ok_or_else(err)?;
            accepting.push((byte >> (i % 8)) & 1 == 1);
        }
        let robp = Robp {
            s_bits,
            d_bits,
            t_len,
            layers,
            start,
            accepting,
        };
        robp.validate()?;
        Ok(robp)
    }

    /// JSON provenance sidecar for the binary format.
    pub fn sidecar(&self) -> RobpSidecar {
        RobpSidecar {
            format: "ROBPBIN1".into(),
            s_bits: self.s_bits,
            d_bits: self.d_bits,
            t_len: self.t_len,
            start: self.start,
            accepting_count: self.accepting.iter().filter(|&&a| a).count(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RobpSidecar {
    pub format: String,
    pub s_bits: u32,
    pub d_bits: u32,
    pub t_len: usize,
    pub start: u32,
    pub accepting_count: usize,
}

/// Recursive seed-recycling generator: level 0 outputs its seed block;
/// level l+1 on seed (x, sigma) outputs (level_l(x), level_l(h_sigma(x)))
/// with h_sigma an affine Toeplitz map on the block part of x. Output is
/// T = 2^levels blocks of `block_bits` bits.
#[derive(Clone, Debug)]
pub struct InwPrg {
    block_bits: usize,
    levels: u32,
    declared_s: u32,
    declared_eps: f64,
}

impl InwPrg {
    pub fn new(s_bits: u32, block_bits: usize, t_len: usize, eps: f64) -> Result<Self> {
        if block_bits == 0 {
            return Err(Error::InvalidParam("block_bits must be >= 1".into()));
        }
        if !t_len.is_power_of_two() {
            return Err(Error::InvalidParam(format!(
                "T must be a power of two (pad otherwise), got {t_len}"
            )));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParam(format!("eps must be in (0,1], got {eps}")));
        }
        Ok(InwPrg {
            block_bits,
            levels: t_len.trailing_zeros(),
            declared_s: s_bits,
            declared_eps: eps,
        })
    }

    pub fn block_bits(&self) -> usize {
        self.block_bits
    }

    pub fn t_len(&self) -> usize {
        1usize << self.levels
    }

    pub fn declared_eps(&self) -> f64 {
        self.declared_eps
    }

    fn sigma_len(&self) -> usize {
        3 * self.block_bits - 1
    }

    /// Expands the seed into T blocks, each `block_bits` bits.
    pub fn expand_blocks(&self, seed: &Seed) -> Result<Vec<Seed>> {
        if seed.len() != self.seed_len() {
            return Err(Error::SeedLength {
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        let b = self.block_bits;
        let bw = b.div_ceil(64);
        let mut sigmas_c = Vec::with_capacity(self.levels as usize);
        let mut sigmas_off = Vec::with_capacity(self.levels as usize);
        for l in 0..self.levels as usize {
            let base = b + l * self.sigma_len();
            sigmas_c.push(seed.slice(base, 2 * b - 1));
            sigmas_off.push(seed.slice(base + 2 * b - 1, b));
        }
        // flat doubling: block 0 is the seed block; each level maps the
        // existing blocks through its sigma into the next free slots. The
        // top level is applied first, so the left half of the output never
        // depends on the top sigma.
        let mut flat = vec![0u64; self.t_len() * bw];
        flat[..bw].copy_from_slice(seed.slice(0, b).words());
        let mut count = 1usize;
        for l in (0..self.levels as usize).rev() {
            let (src, dst) = flat.split_at_mut(count * bw);
            for i in 0..count {
                let x = &src[i * bw..(i + 1) * bw];
                let y = toeplitz_apply(sigmas_c[l].words(), x, b);
                for (k, slot) in dst[i * bw..(i + 1) * bw].iter_mut().enumerate() {
                    *slot = y[k] ^ sigmas_off[l].words()[k];
                }
            }
            count *= 2;
        }
        Ok(flat
            .chunks(bw)
            .map(|ws| Seed::from_words(ws.to_vec(), b))
            .collect())
    }

    /// Exhaustive-seed acceptance probability of an ROBP whose block width
    /// matches this generator.
    pub fn exhaustive_acceptance(&self, robp: &Robp) -> Result<f64> {
        if robp.d_bits as usize != self.block_bits || robp.t_len != self.t_len() {
            return Err(Error::DimensionMismatch(
                "ROBP shape does not match generator output".into(),
            ));
        }
        let r = self.seed_len();
        if r > 24 {
            return Err(Error::Capacity(format!(
                "exhaustive INW check over 2^{r} seeds refused"
            )));
        }
        let mut accepted = 0u64;
        for v in 0u64..(1u64 << r) {
            let seed = Seed::from_u64(v, r);
            let blocks = self.expand_blocks(&seed)?;
            let words: Vec<u64> = blocks.iter().map(|s| s.read_u64(0, self.block_bits)).collect();
            if robp.eval(&words)? {
                accepted += 1;
            }
        }
        Ok(accepted as f64 / (1u64 << r) as f64)
    }
}

impl Generator for InwPrg {
    fn seed_len(&self) -> usize {
        self.block_bits + self.levels as usize * self.sigma_len()
    }
    fn output_len(&self) -> usize {
        self.t_len() * self.block_bits
    }
    fn expand(&self, seed: &Seed) -> Result<SignVector> {
        check_seed(self, seed)?;
        let blocks = self.expand_blocks(seed)?;
        let mut all = Seed::zero(0);
        for b in blocks {
            all = all.concat(&b);
        }
        Ok(SignVector::from_seed_bits(&all))
    }
    fn descriptor(&self) -> Descriptor {
        Descriptor::Inw {
            s_bits: self.declared_s,
            block_bits: self.block_bits,
            t_len: self.t_len(),
            eps: self.declared_eps,
        }
    }
}

/// Compiles a halfspace test |<w, x>| >= threshold into an ROBP that tracks
/// the running sum exactly as an integer multiple of 1/n^2, with each weight
/// rounded up to that grid. The running sum is clamped to the exact l1 bound
/// of the rounded weights, so the two saturation states are unreachable for
/// valid inputs; they are absorbing and kept only as a corruption signal.
pub fn halfspace_robp(w: &[f64], threshold: f64, d_bits: u32) -> Result<Robp> {
    let n = w.len();
    if n == 0 || d_bits == 0 {
        return Err(Error::InvalidParam("empty weight vector or zero block".into()));
    }
    let scale = (n * n) as f64;
    let w_int: Vec<i64> = w.iter().map(|&wi| (wi * scale).ceil() as i64).collect();
    let max_sum: i64 = w_int.iter().map(|&v| v.abs()).sum();
    let span = 2 * max_sum + 1 + 2; // all reachable sums plus two saturation states
    let s_bits = (span as u64).next_power_of_two().trailing_zeros().max(1);
    if s_bits > 24 {
        return Err(Error::Capacity(format!(
            "halfspace ROBP needs 2^{s_bits} states (> 2^24)"
        )));
    }
    let states = 1usize << s_bits;
    let bpl = 1usize << d_bits;
    let t_len = n.div_ceil(d_bits as usize);
    let sat_lo = 0u32;
    let sat_hi = (span - 1) as u32;
    let origin = max_sum + 1; // state index of sum 0
    let mut layers = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut layer = vec![sat_lo; states * bpl];
        for s in 0..states {
            for blk in 0..bpl {
                let idx = s * bpl + blk;
                if s as u32 == sat_lo || s as u32 >= sat_hi {
                    // absorbing: saturated or out-of-range encodings
                    layer[idx] = if s as u32 == sat_lo { sat_lo } else { sat_hi };
                    continue;
                }
                let mut sum = s as i64 - origin;
                for bit in 0..d_bits as usize {
                    let coord = t * d_bits as usize + bit;
                    if coord >= n {
                        break;
                    }
                    let sign = if (blk >> bit) & 1 == 1 { -1 } else { 1 };
                    sum += sign * w_int[coord];
                }
                layer[idx] = if sum < -max_sum {
                    sat_lo
                } else if sum > max_sum {
                    sat_hi
                } else {
                    (sum + origin) as u32
                };
            }
        }
        layers.push(layer);
    }
    let thresh_int = (threshold * scale).ceil() as i64;
    let accepting: Vec<bool> = (0..states)
        .map(|s| {
            if s as u32 == sat_lo || s as u32 >= sat_hi {
                false
            } else {
                (s as i64 - origin).abs() >= thresh_int
            }
        })
        .collect();
    let robp = Robp {
        s_bits,
        d_bits,
        t_len,
        layers,
        start: origin as u32,
        accepting,
    };
    robp.validate()?;
    Ok(robp)
}

/// Rounded weights as used by `halfspace_robp` (multiples of 1/n^2).
pub fn round_weights_up(w: &[f64]) -> Vec<f64> {
    let scale = (w.len() * w.len()) as f64;
    w.iter().map(|&wi| (wi * scale).ceil() / scale).collect()
}

/// Uniformly random ROBP for fooling-corpus tests.
pub fn random_robp<R: rand::Rng>(rng: &mut R, s_bits: u32, d_bits: u32, t_len: usize) -> Robp {
    let states = 1usize << s_bits;
    let bpl = 1usize << d_bits;
    let layers = (0..t_len)
        .map(|_| {
            (0..states * bpl)
                .map(|_| rng.gen_range(0..states as u32))
                .collect()
        })
        .collect();
    let accepting = (0..states).map(|_| rng.gen_bool(0.5)).collect();
    Robp {
        s_bits,
        d_bits,
        t_len,
        layers,
        start: rng.gen_range(0..states as u32),
        accepting,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn parity_robp() -> Robp {
        // single-bit blocks, 3 layers, tracks parity of input bits; accepts
        // odd parity.
        let layer = vec![0u32, 1, 1, 0]; // state*2 + block
        Robp {
            s_bits: 1,
            d_bits: 1,
            t_len: 3,
            layers: vec![layer.clone(), layer.clone(), layer],
            start: 0,
            accepting: vec![false, true],
        }
    }

    #[test]
    fn parity_robp_and_all_accepting() {
        let p = parity_robp();
        assert!(p.eval(&[1, 0, 1]).is_ok());
        assert!(!p.eval(&[1, 0, 1]).unwrap()); // parity 0 -> reject
        assert!(p.eval(&[1, 0, 0]).unwrap());
        let mut all = parity_robp();
        all.accepting = vec![true, true];
        for v in 0..8u64 {
            let blocks = [(v >> 2) & 1, (v >> 1) & 1, v & 1];
            assert!(all.eval(&blocks).unwrap());
        }
    }

    #[test]
    fn propagation_matches_enumeration_small() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let robp = random_robp(&mut rng, 3, 2, 5); // T*D = 10 bits
            let exact = robp.uniform_acceptance();
            let mut acc = 0u64;
            let total = 1u64 << 10;
            for v in 0..total {
                let blocks: Vec<u64> = (0..5).map(|t| (v >> (2 * t)) & 3).collect();
                if robp.eval(&blocks).unwrap() {
                    acc += 1;
                }
            }
            assert!((exact - acc as f64 / total as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn inw_t1_outputs_seed_block() {
        let g = InwPrg::new(1, 5, 1, 0.5).unwrap();
        assert_eq!(g.seed_len(), 5);
        let seed = Seed::from_u64(0b10110, 5);
        let blocks = g.expand_blocks(&seed).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0], seed);
    }

    #[test]
    fn inw_left_half_ignores_sigma() {
        let g = InwPrg::new(1, 3, 2, 0.5).unwrap();
        let x = Seed::from_u64(0b101, 3);
        let mut outs = Vec::new();
        for sv in 0..(1u64 << (g.seed_len() - 3)) {
            let seed = x.concat(&Seed::from_u64(sv, g.seed_len() - 3));
            let blocks = g.expand_blocks(&seed).unwrap();
            assert_eq!(blocks[0], x, "left half must not depend on sigma");
            outs.push(blocks[1].clone());
        }
        // and the right half does vary
        assert!(outs.iter().any(|b| b != &outs[0]));
    }

    #[test]
    fn toeplitz_matches_naive() {
        let b = 70;
        let c_bits: Vec<bool> = (0..2 * b - 1).map(|i| (i * 7 + 3) % 5 < 2).collect();
        let x_bits: Vec<bool> = (0..b).map(|i| (i * 11 + 1) % 3 == 0).collect();
        let c = Seed::from_bits(&c_bits);
        let x = Seed::from_bits(&x_bits);
        let y = toeplitz_apply(c.words(), x.words(), b);
        for i in 0..b {
            let mut naive = false;
            for j in 0..b {
                naive ^= c_bits[b - 1 + i - j] && x_bits[j];
            }
            assert_eq!((y[i / 64] >> (i % 64)) & 1 == 1, naive, "row {i}");
        }
    }

    #[test]
    fn halfspace_single_coordinate_always_accepts_at_half() {
        let robp = halfspace_robp(&[1.0], 0.5, 1).unwrap();
        assert!((robp.uniform_acceptance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halfspace_two_coordinates_half_acceptance() {
        let w = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let robp = halfspace_robp(&w, 1.0, 1).unwrap();
        assert!((robp.uniform_acceptance() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rounding_error_at_most_one_over_n() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 20;
        for _ in 0..50 {
            let mut w: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            w.iter_mut().for_each(|x| *x /= norm);
            let wr = round_weights_up(&w);
            for _ in 0..20 {
                let x: Vec<f64> = (0..n)
                    .map(|_| if rand::Rng::gen_bool(&mut rng, 0.5) { 1.0 } else { -1.0 })
                    .collect();
                let dot: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
                let dot_r: f64 = wr.iter().zip(&x).map(|(a, b)| a * b).sum();
                assert!((dot - dot_r).abs() <= 1.0 / n as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn robp_binary_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let robp = random_robp(&mut rng, 3, 2, 4);
        let bin = robp.to_binary();
        assert_eq!(Robp::from_binary(&bin).unwrap(), robp);
    }
}
