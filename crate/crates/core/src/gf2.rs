//! Binary field arithmetic GF(2^f) for 1 <= f <= 63.
//!
//! Elements are `u64` coefficient vectors. Multiplication is carry-less
//! (PCLMULQDQ when the CPU has it, a nibble-windowed software path
//! otherwise) followed by folding reduction against a low-weight
//! irreducible polynomial. The polynomial for each degree is found once at
//! startup by searching trinomials then pentanomials and verifying
//! irreducibility with Rabin's test, so no hardcoded table needs trusting.

use crate::error::{Error, Result};
use std::sync::OnceLock;

pub const MAX_FIELD_BITS: u32 = 63;

#[inline]
pub fn parity64(x: u64) -> u64 {
    (x.count_ones() & 1) as u64
}

#[cfg(target_arch = "x86_64")]
#[inline]
pub(crate) fn have_pclmul() -> bool {
    static HAVE_PCLMUL: OnceLock<bool> = OnceLock::new();
    *HAVE_PCLMUL.get_or_init(|| {
        std::arch::is_x86_feature_detected!("pclmulqdq")
            && std::arch::is_x86_feature_detected!("sse4.1")
    })
}

#[cfg(not(target_arch = "x86_64"))]
#[inline]
pub(crate) fn have_pclmul() -> bool {
    false
}

/// Carry-less 64x64 -> 128 multiplication.
#[inline]
pub fn clmul64(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if have_pclmul() {
            // SAFETY: feature presence checked above.
            return unsafe { clmul64_hw(a, b) };
        }
    }
    clmul64_soft(a, b)
}

/// Hardware carry-less multiply via inline asm so it inlines into callers
/// (a #[target_feature] function cannot). Callers gate on `have_pclmul`.
///
/// SAFETY: requires the pclmulqdq and sse4.1 CPU features.
#[cfg(target_arch = "x86_64")]
#[inline]
pub(crate) unsafe fn clmul64_hw(a: u64, b: u64) -> u128 {
    let lo: u64;
    let hi: u64;
    core::arch::asm!(
        "movq {t0}, {a}",
        "movq {t1}, {b}",
        "pclmulqdq {t0}, {t1}, 0",
        "movq {lo}, {t0}",
        "pextrq {hi}, {t0}, 1",
        a = in(reg) a,
        b = in(reg) b,
        t0 = out(xmm_reg) _,
        t1 = out(xmm_reg) _,
        lo = out(reg) lo,
        hi = out(reg) hi,
        options(pure, nomem, nostack),
    );
    ((hi as u128) << 64) | lo as u128
}

fn clmul64_soft(a: u64, b: u64) -> u128 {
    // 4-bit windows over b.
    let a = a as u128;
    let mut table = [0u128; 16];
    for j in 1..16u32 {
        let lsb = j & j.wrapping_neg();
        table[j as usize] = table[(j ^ lsb) as usize] ^ (a << lsb.trailing_zeros());
    }
    let mut acc = 0u128;
    let mut shift = 0u32;
    let mut rem = b;
    while rem != 0 {
        acc ^= table[(rem & 0xf) as usize] << shift;
        rem >>= 4;
        shift += 4;
    }
    acc
}

/// GF(2^f) with reduction polynomial x^f + low(x).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryField {
    bits: u32,
    low: u64,
    /// bit positions of low(x); folding is a couple of shift-xors
    shifts: [u8; 4],
    nshifts: u8,
    use_hw: bool,
}

impl BinaryField {
    /// The canonical field of the given degree (1..=63).
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_FIELD_BITS {
            return Err(Error::Capacity(format!(
                "field degree {bits} outside supported range 1..={MAX_FIELD_BITS}"
            )));
        }
        let low = reduction_low(bits);
        let mut shifts = [0u8; 4];
        let mut nshifts = 0u8;
        let mut rem = low;
        while rem != 0 {
            shifts[nshifts as usize] = rem.trailing_zeros() as u8;
            nshifts += 1;
            rem &= rem - 1;
        }
        Ok(BinaryField {
            bits,
            low,
            shifts,
            nshifts,
            use_hw: have_pclmul(),
        })
    }

    /// Smallest supported field with at least `min_size` elements.
    pub fn with_at_least(min_size: u128) -> Result<Self> {
        for bits in 1..=MAX_FIELD_BITS {
            if (1u128 << bits) >= min_size {
                return BinaryField::new(bits);
            }
        }
        Err(Error::Capacity(format!(
            "no supported binary field has >= {min_size} elements (max degree {MAX_FIELD_BITS})"
        )))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> u128 {
        1u128 << self.bits
    }

    pub fn mask(&self) -> u64 {
        if self.bits == 64 {
            !0
        } else {
            (1u64 << self.bits) - 1
        }
    }

    /// Full reduction polynomial including the leading term, as u128.
    pub fn poly_full(&self) -> u128 {
        (1u128 << self.bits) | self.low as u128
    }

    /// Fold the overflow down using x^f = low(x): each round xors shifted
    /// copies of the high part, one per tap of low(x). Minimal-weight
    /// polynomials keep the taps short so this converges in a few rounds.
    #[inline(always)]
    pub fn reduce(&self, mut x: u128) -> u64 {
        let f = self.bits;
        let mask = self.mask() as u128;
        loop {
            let hi = x >> f;
            if hi == 0 {
                break;
            }
            x &= mask;
            for s in 0..self.nshifts {
                x ^= hi << self.shifts[s as usize];
            }
        }
        x as u64
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        #[cfg(target_arch = "x86_64")]
        {
            if self.use_hw {
                // SAFETY: use_hw is set only when pclmulqdq was detected.
                return self.reduce(unsafe { clmul64_hw(a, b) });
            }
        }
        self.reduce(clmul64_soft(a, b))
    }

    #[inline]
    pub fn sqr(&self, a: u64) -> u64 {
        self.mul(a, a)
    }

    /// Eight products of a common left factor, reduced; written so the
    /// carry-less multiplies have no data dependence and pipeline.
    #[inline(always)]
    pub fn mul8(&self, base: u64, rhs: &[u64; 8]) -> [u64; 8] {
        #[cfg(target_arch = "x86_64")]
        {
            if self.use_hw {
                // SAFETY: use_hw is set only when pclmulqdq was detected.
                return unsafe { self.mul8_hw(base, rhs) };
            }
        }
        let mut out = [0u64; 8];
        for (o, &r) in out.iter_mut().zip(rhs) {
            *o = self.reduce(clmul64_soft(base, r));
        }
        out
    }

    /// SAFETY: requires the pclmulqdq CPU feature (checked via use_hw).
    #[cfg(target_arch = "x86_64")]
    #[inline]
    unsafe fn mul8_hw(&self, base: u64, rhs: &[u64; 8]) -> [u64; 8] {
        let mut prods = [0u128; 8];
        for (p, &r) in prods.iter_mut().zip(rhs) {
            *p = clmul64_hw(base, r);
        }
        let mut out = [0u64; 8];
        for (o, &p) in out.iter_mut().zip(&prods) {
            *o = self.reduce(p);
        }
        out
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        while exp != 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.sqr(base);
            exp >>= 1;
        }
        acc
    }
}

/// Degree of a nonzero GF(2)[x] polynomial stored in u128.
fn poly_deg(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

/// Remainder of a mod b over GF(2)[x].
fn poly_mod(mut a: u128, b: u128) -> u128 {
    let db = poly_deg(b);
    while a != 0 && poly_deg(a) >= db {
        a ^= b << (poly_deg(a) - db);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_mod(a, b);
        a = b;
        b = r;
    }
    a
}

/// Multiplication of two polynomials of degree < n, reduced mod p (degree n).
fn poly_mulmod(a: u64, b: u64, p: u128) -> u64 {
    poly_mod(clmul64(a, b), p) as u64
}

/// Rabin irreducibility test for p of degree n over GF(2).
fn is_irreducible(p: u128, n: u32) -> bool {
    // x^(2^n) == x mod p
    let x_red = poly_mod(2, p) as u64;
    let mut s = x_red;
    for _ in 0..n {
        s = poly_mulmod(s, s, p);
    }
    if s != x_red {
        return false;
    }
    // gcd(x^(2^(n/q)) - x, p) == 1 for every prime q | n
    let mut m = n;
    let mut primes = Vec::new();
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            primes.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    for q in primes {
        let mut s = x_red;
        for _ in 0..(n / q) {
            s = poly_mulmod(s, s, p);
        }
        if poly_gcd((s ^ x_red) as u128, p) != 1 {
            return false;
        }
    }
    true
}

/// Low part (polynomial minus x^f) of the canonical irreducible for degree f.
fn reduction_low(bits: u32) -> u64 {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0u64; MAX_FIELD_BITS as usize + 1];
        for n in 1..=MAX_FIELD_BITS {
            t[n as usize] = find_irreducible_low(n);
        }
        t
    });
    table[bits as usize]
}

fn find_irreducible_low(n: u32) -> u64 {
    if n == 1 {
        return 1; // x + 1
    }
    // Trinomials x^n + x^k + 1, smallest k first.
    for k in 1..n {
        let low = (1u64 << k) | 1;
        if is_irreducible((1u128 << n) | low as u128, n) {
            return low;
        }
    }
    // Pentanomials x^n + x^a + x^b + x^c + 1 with a > b > c >= 1.
    for a in 3..n {
        for b in 2..a {
            for c in 1..b {
                let low = (1u64 << a) | (1u64 << b) | (1u64 << c) | 1;
                if is_irreducible((1u128 << n) | low as u128, n) {
                    return low;
                }
            }
        }
    }
    unreachable!("an irreducible of weight <= 5 exists for every degree <= 63")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_clmul_matches_hw_path() {
        let cases = [
            (0u64, 0u64),
            (1, 1),
            (0xffff_ffff_ffff_ffff, 0xffff_ffff_ffff_ffff),
            (0x1234_5678_9abc_def0, 0x0fed_cba9_8765_4321),
        ];
        for (a, b) in cases {
            assert_eq!(clmul64(a, b), clmul64_soft(a, b));
        }
    }

    #[test]
    fn every_supported_degree_gets_a_verified_irreducible() {
        for n in 1..=MAX_FIELD_BITS {
            let low = reduction_low(n);
            let p = (1u128 << n) | low as u128;
            assert!(is_irreducible(p, n), "degree {n} polynomial not irreducible");
            assert!(low.count_ones() <= 4, "degree {n} polynomial too heavy");
        }
    }

    #[test]
    fn field_axioms_smoke() {
        let f = BinaryField::new(8).unwrap();
        // (a*b)*c == a*(b*c) and distributivity on a small sample
        for a in [1u64, 3, 7, 0x53, 0xca] {
            for b in [1u64, 2, 0x8e, 0xff] {
                for c in [1u64, 5, 0x1d] {
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                }
            }
        }
    }

    #[test]
    fn pow_matches_repeated_mul() {
        let f = BinaryField::new(16).unwrap();
        let b = 0xabcd;
        let mut acc = 1u64;
        for e in 0..40u64 {
            assert_eq!(f.pow(b, e), acc);
            acc = f.mul(acc, b);
        }
    }

    #[test]
    fn nonzero_elements_invertible() {
        // In GF(2^f), a^(2^f - 1) = 1 for a != 0.
        let f = BinaryField::new(11).unwrap();
        for a in [1u64, 2, 3, 0x5a5 & f.mask(), f.mask()] {
            assert_eq!(f.pow(a, (f.size() - 1) as u64), 1);
        }
    }
}
