//! Multi-modular integer q-expansions for long precisions.
//!
//! Exact rational arithmetic in [`crate::qseries`] is quadratic and becomes
//! impractical beyond a few thousand coefficients. Integer expansions that are
//! needed to 10^6 terms (Δ, level-1 monomials, eta products) are instead computed
//! modulo several NTT-friendly primes `c·2^22 + 1 < 2^31` and reconstructed by
//! Garner's mixed-radix CRT, given an a-priori bound on the coefficient size.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::par::{map_collect, Parallelism};
use crate::{Error, Result};

const TWO_ADICITY: u32 = 22;
/// Longest truncated product supported: cyclic length `2^22 >= 2·len - 1`.
pub const MAX_LEN: usize = 1 << (TWO_ADICITY - 1);
const SCHOOLBOOK_CUTOFF: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NttPrime {
    pub p: u32,
    /// Primitive root modulo `p`.
    pub g: u32,
}

/// All primes `c·2^22 + 1 < 2^31`, largest first.
pub fn ntt_primes() -> &'static [NttPrime] {
    static PRIMES: OnceLock<Vec<NttPrime>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let step = 1u64 << TWO_ADICITY;
        let mut out = Vec::new();
        let mut c = ((1u64 << 31) - 2) / step;
        while c >= 1 {
            let p = c * step + 1;
            if crate::arith::is_prime(p) {
                out.push(NttPrime { p: p as u32, g: primitive_root(p) });
            }
            c -= 1;
        }
        out
    })
}

fn primitive_root(p: u64) -> u32 {
    let factors: Vec<u64> = crate::arith::factorize(p - 1).expect("p - 1 > 0").into_iter().map(|(q, _)| q).collect();
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("prime modulus has a primitive root") as u32
}

#[inline]
pub fn pow_mod(mut base: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

#[inline]
pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Reduces a signed integer modulo `p` into `[0, p)`.
#[inline]
pub fn reduce_i64(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

/// Barrett reduction for a fixed modulus below 2^32.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Barrett {
    p: u64,
    m: u64,
}

impl Barrett {
    pub(crate) fn new(p: u64) -> Self {
        Barrett { p, m: u64::MAX / p }
    }

    #[inline(always)]
    pub(crate) fn reduce(self, x: u64) -> u64 {
        let q = ((x as u128 * self.m as u128) >> 64) as u64;
        let r = x - q * self.p;
        if r >= self.p { r - self.p } else { r }
    }

    #[inline(always)]
    pub(crate) fn mul(self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }
}

/// Twiddles w^k (k < half) and their Shoup companions floor(w^k·2^32/p).
fn twiddles(w_len: u64, half: usize, br: Barrett) -> (Vec<u32>, Vec<u32>) {
    let mut tw = Vec::with_capacity(half);
    let mut pre = Vec::with_capacity(half);
    let mut w = 1u64;
    for _ in 0..half {
        tw.push(w as u32);
        pre.push(((w << 32) / br.p) as u32);
        w = br.mul(w, w_len);
    }
    (tw, pre)
}

#[inline(always)]
fn shoup_mul(a: u32, w: u32, w_pre: u32, p: u32) -> u32 {
    let q = ((a as u64 * w_pre as u64) >> 32) as u32;
    let r = a.wrapping_mul(w).wrapping_sub(q.wrapping_mul(p));
    if r >= p { r - p } else { r }
}

/// Forward transforms are decimation-in-frequency (bit-reversed output); inverse
/// transforms are decimation-in-time on bit-reversed input. Pointwise products do
/// not care about the order, so no permutation pass is needed.
fn ntt(a: &mut [u32], invert: bool, prime: NttPrime) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    let p = prime.p as u64;
    let p32 = prime.p;
    let br = Barrett::new(p);
    let root = |len: usize| {
        let w = pow_mod(prime.g as u64, (p - 1) / len as u64, p);
        if invert { inv_mod(w, p) } else { w }
    };
    if !invert {
        let mut len = n;
        while len >= 2 {
            let half = len / 2;
            let (tw, pre) = twiddles(root(len), half, br);
            for block in a.chunks_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for k in 0..half {
                    let (u, v) = (lo[k], hi[k]);
                    let sum = u + v;
                    lo[k] = if sum >= p32 { sum - p32 } else { sum };
                    let diff = if u >= v { u - v } else { u + p32 - v };
                    hi[k] = shoup_mul(diff, tw[k], pre[k], p32);
                }
            }
            len /= 2;
        }
    } else {
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let (tw, pre) = twiddles(root(len), half, br);
            for block in a.chunks_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for k in 0..half {
                    let u = lo[k];
                    let v = shoup_mul(hi[k], tw[k], pre[k], p32);
                    let sum = u + v;
                    lo[k] = if sum >= p32 { sum - p32 } else { sum };
                    hi[k] = if u >= v { u - v } else { u + p32 - v };
                }
            }
            len <<= 1;
        }
    }
    if invert {
        let n_inv = inv_mod(n as u64, p);
        for x in a.iter_mut() {
            *x = br.mul(*x as u64, n_inv) as u32;
        }
    }
}

/// Product of two residue series truncated to `len` coefficients.
pub fn mul_trunc(a: &[u32], b: &[u32], len: usize, prime: NttPrime) -> Result<Vec<u32>> {
    let a = &a[..a.len().min(len)];
    let b = &b[..b.len().min(len)];
    if a.is_empty() || b.is_empty() {
        return Ok(vec![0; len]);
    }
    let br = Barrett::new(prime.p as u64);
    if a.len().min(b.len()) <= SCHOOLBOOK_CUTOFF {
        let mut out = vec![0u64; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(len - i) {
                out[i + j] = br.reduce(out[i + j] + x as u64 * y as u64);
            }
        }
        return Ok(out.into_iter().map(|v| v as u32).collect());
    }
    let need = a.len() + b.len() - 1;
    let size = need.next_power_of_two();
    if size > 1 << TWO_ADICITY {
        return Err(Error::invalid(format!("product length {need} exceeds NTT capacity")));
    }
    let mut fa = vec![0u32; size];
    fa[..a.len()].copy_from_slice(a);
    ntt(&mut fa, false, prime);
    if std::ptr::eq(a, b) {
        for x in fa.iter_mut() {
            *x = br.mul(*x as u64, *x as u64) as u32;
        }
    } else {
        let mut fb = vec![0u32; size];
        fb[..b.len()].copy_from_slice(b);
        ntt(&mut fb, false, prime);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = br.mul(*x as u64, *y as u64) as u32;
        }
    }
    ntt(&mut fa, true, prime);
    fa.truncate(len);
    fa.resize(len, 0);
    Ok(fa)
}

/// `a^e` truncated to `len`, by repeated squaring.
pub fn pow_trunc(a: &[u32], e: u32, len: usize, prime: NttPrime) -> Result<Vec<u32>> {
    let mut result: Option<Vec<u32>> = None;
    let mut base: Vec<u32> = a[..a.len().min(len)].to_vec();
    base.resize(len, 0);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => mul_trunc(&r, &base, len, prime)?,
            });
        }
        e >>= 1;
        if e > 0 {
            base = mul_trunc(&base, &base, len, prime)?;
        }
    }
    Ok(result.unwrap_or_else(|| {
        let mut one = vec![0u32; len];
        if len > 0 {
            one[0] = 1;
        }
        one
    }))
}

/// Bound `|a(n)| <= scale · max(n, 1)^exponent` in log2 form, for sizing the CRT.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBound {
    pub log2_scale: f64,
    pub exponent: f64,
}

impl GrowthBound {
    pub fn new(scale: f64, exponent: f64) -> Self {
        GrowthBound { log2_scale: scale.log2(), exponent }
    }

    /// Bound for a truncated product: Σ_{i<=n} A i^α · B (n-i)^β <= (n+1)·A·B·n^(α+β) <= 2AB n^(α+β+1).
    pub fn product(self, other: GrowthBound) -> GrowthBound {
        GrowthBound { log2_scale: self.log2_scale + other.log2_scale + 1.0, exponent: self.exponent + other.exponent + 1.0 }
    }

    pub fn pow(self, e: u32) -> GrowthBound {
        if e == 0 {
            return GrowthBound { log2_scale: 0.0, exponent: 0.0 };
        }
        (1..e).fold(self, |acc, _| acc.product(self))
    }

    /// Bits needed to hold every coefficient with index `< len`.
    pub fn bits(self, len: usize) -> u32 {
        let n = (len.max(2) - 1) as f64;
        (self.log2_scale + self.exponent * n.log2()).ceil().max(1.0) as u32
    }
}

/// Residues of one integer sequence modulo several NTT primes.
#[derive(Clone, Debug)]
pub struct Residues {
    primes: Vec<NttPrime>,
    data: Vec<Vec<u32>>,
    len: usize,
}

impl Residues {
    /// Computes `f(prime)` for enough primes to represent values of magnitude `< 2^bits`,
    /// plus one extra prime that is used to cross-check the reconstruction.
    pub fn compute<F>(bits: u32, len: usize, par: Parallelism, f: F) -> Result<Residues>
    where
        F: Fn(NttPrime) -> Result<Vec<u32>> + Sync + Send,
    {
        let primes = Self::select_primes(bits, len)?;
        let data = map_collect(primes.len(), par, |i| f(primes[i])).into_iter().collect::<Result<Vec<_>>>()?;
        if data.iter().any(|d| d.len() != len) {
            return Err(Error::InternalInconsistency("residue vector length mismatch".into()));
        }
        let res = Residues { primes, data, len };
        res.cross_check(par)?;
        Ok(res)
    }

/// Like [`Residues::compute`] for several sequences that share intermediate work:
    /// `f` returns all of them for one prime. Every sequence is sized by `bits`.
    pub fn compute_many<F>(bits: u32, len: usize, count: usize, par: Parallelism, f: F) -> Result<Vec<Residues>>
    where
        F: Fn(NttPrime) -> Result<Vec<Vec<u32>>> + Sync + Send,
    {
        let primes = Self::select_primes(bits, len)?;
        let per_prime = map_collect(primes.len(), par, |i| f(primes[i])).into_iter().collect::<Result<Vec<_>>>()?;
        if per_prime.iter().any(|v| v.len() != count) {
            return Err(Error::InternalInconsistency("residue batch size mismatch".into()));
        }
        let mut out = Vec::with_capacity(count);
        for c in 0..count {
            let data: Vec<Vec<u32>> = per_prime.iter().map(|v| v[c].clone()).collect();
            if data.iter().any(|d| d.len() != len) {
                return Err(Error::InternalInconsistency("residue vector length mismatch".into()));
            }
            let res = Residues { primes: primes.clone(), data, len };
            res.cross_check(par)?;
            out.push(res);
        }
        Ok(out)
    }

    fn select_primes(bits: u32, len: usize) -> Result<Vec<NttPrime>> {
        if len > MAX_LEN {
            return Err(Error::invalid(format!("length {len} exceeds the supported maximum {MAX_LEN}")));
        }
        let all = ntt_primes();
        let mut count = 0;
        let mut acc = 0.0;
        while acc < bits as f64 + 2.0 {
            if count == all.len() {
                return Err(Error::invalid(format!("{bits}-bit coefficients exceed the available CRT primes")));
            }
            acc += (all[count].p as f64).log2();
            count += 1;
        }
        if count == all.len() {
            return Err(Error::invalid("no prime left for the CRT cross-check"));
        }
        Ok(all[..=count].to_vec())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn working(&self) -> usize {
        self.primes.len() - 1
    }

    /// Garner digits for coefficient `n` over the working primes, plus the sign flag.
    fn digits(&self, n: usize, tables: &GarnerTables) -> (Vec<u64>, bool) {
        let k = self.working();
        let mut d = vec![0u64; k];
        for i in 0..k {
            let p = self.primes[i].p as u64;
            let br = tables.barrett[i];
            let mut acc = 0u64;
            for j in 0..i {
                acc = br.reduce(acc + d[j] * tables.prefix_mod[i][j]);
            }
            let r = self.data[i][n] as u64;
            d[i] = br.mul(if r >= acc { r - acc } else { r + p - acc }, tables.prefix_inv[i]);
        }
        // negative iff v > M - 1 - v, compared digit-wise from the top
        let mut negative = false;
        for i in (0..k).rev() {
            let c = self.primes[i].p as u64 - 1 - d[i];
            if d[i] != c {
                negative = d[i] > c;
                break;
            }
        }
        if negative {
            for i in 0..k {
                d[i] = self.primes[i].p as u64 - 1 - d[i];
            }
        }
        (d, negative)
    }

    fn tables(&self) -> GarnerTables {
        let k = self.primes.len();
        let mut prefix_mod = vec![vec![0u64; k]; k];
        let mut prefix_inv = vec![0u64; k];
        for i in 0..k {
            let p = self.primes[i].p as u64;
            let mut prod = 1u64;
            for j in 0..i {
                prefix_mod[i][j] = prod;
                prod = prod * (self.primes[j].p as u64 % p) % p;
            }
            prefix_mod[i][i] = prod;
            prefix_inv[i] = inv_mod(prod, p);
        }
        let barrett = self.primes.iter().map(|q| Barrett::new(q.p as u64)).collect();
        GarnerTables { prefix_mod, prefix_inv, barrett }
    }

    /// Checks the reconstruction against the spare prime.
    fn cross_check(&self, par: Parallelism) -> Result<()> {
        let tables = self.tables();
        let k = self.working();
        let q = self.primes[k].p as u64;
        let bad = crate::par::map_chunks(0..self.len, 1 << 14, par, |lo, hi| {
            (lo..hi).find(|&n| {
                let (d, negative) = self.digits(n, &tables);
                let mut v = 0u64;
                for i in (0..k).rev() {
                    v = (v * (self.primes[i].p as u64 % q) + d[i]) % q;
                }
                let v = if negative { (q - (v + 1) % q) % q } else { v };
                v != self.data[k][n] as u64
            })
        });
        if let Some(n) = bad.into_iter().flatten().next() {
            return Err(Error::InternalInconsistency(format!("CRT cross-check failed at index {n}: coefficient bound too small")));
        }
        Ok(())
    }

    /// Reconstructed values as `f64` (relative error a few ulp).
    pub fn to_f64(&self, par: Parallelism) -> Vec<f64> {
        let tables = self.tables();
        let k = self.working();
        crate::par::map_chunks(0..self.len, 1 << 14, par, |lo, hi| {
            (lo..hi)
                .map(|n| {
                    let (d, negative) = self.digits(n, &tables);
                    let mut v = 0.0f64;
                    for i in (0..k).rev() {
                        v = v * self.primes[i].p as f64 + d[i] as f64;
                    }
                    if negative { -(v + 1.0) } else { v }
                })
                .collect::<Vec<_>>()
        })
        .concat()
    }

    /// Exact reconstruction of the first `count` coefficients.
    pub fn to_bigint(&self, count: usize) -> Vec<BigInt> {
        let tables = self.tables();
        let k = self.working();
        (0..count.min(self.len))
            .map(|n| {
                let (d, negative) = self.digits(n, &tables);
                let mut v = BigInt::zero();
                for i in (0..k).rev() {
                    v = v * BigInt::from(self.primes[i].p) + BigInt::from(d[i]);
                }
                if negative { -(v + BigInt::one()) } else { v }
            })
            .collect()
    }
}

struct GarnerTables {
    /// `prefix_mod[i][j] = p_0 ⋯ p_{j-1} mod p_i`.
    prefix_mod: Vec<Vec<u64>>,
    /// `(p_0 ⋯ p_{i-1})^{-1} mod p_i`.
    prefix_inv: Vec<u64>,
    barrett: Vec<Barrett>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_table() {
        let ps = ntt_primes();
        assert_eq!(ps.len(), 40);
        for pr in ps {
            assert_eq!((pr.p - 1) % (1 << TWO_ADICITY), 0);
            assert_eq!(pow_mod(pr.g as u64, (pr.p - 1) as u64, pr.p as u64), 1);
            assert_ne!(pow_mod(pr.g as u64, ((pr.p - 1) / 2) as u64, pr.p as u64), 1);
        }
    }

    #[test]
    fn ntt_product_matches_schoolbook() {
        let prime = ntt_primes()[3];
        let a: Vec<u32> = (0..300u32).map(|i| (i * 7919 + 13) % prime.p).collect();
        let b: Vec<u32> = (0..250u32).map(|i| (i * i * 31 + 5) % prime.p).collect();
        let fast = mul_trunc(&a, &b, 400, prime).unwrap();
        let p = prime.p as u64;
        for n in 0..400 {
            let mut s = 0u64;
            for i in 0..=n.min(299) {
                if n - i < 250 {
                    s = (s + a[i] as u64 * b[n - i] as u64) % p;
                }
            }
            assert_eq!(fast[n] as u64, s, "n={n}");
        }
    }

    #[test]
    fn crt_reconstructs_signed_values() {
        // (1 - x)^40 has binomial coefficients up to ~1.4e11 with alternating sign.
        let len = 41;
        let bound = GrowthBound::new(2.0f64.powi(40), 0.0);
        let res = Residues::compute(bound.bits(len), len, Parallelism::Sequential, |pr| {
            let base = vec![1, pr.p - 1];
            pow_trunc(&base, 40, len, pr)
        })
        .unwrap();
        let exact = res.to_bigint(len);
        let floats = res.to_f64(Parallelism::Parallel);
        let mut binom = BigInt::one();
        for k in 0..=40u32 {
            let expected = if k % 2 == 0 { binom.clone() } else { -binom.clone() };
            assert_eq!(exact[k as usize], expected);
            let ef = num_traits::ToPrimitive::to_f64(&expected).unwrap();
            assert!((floats[k as usize] - ef).abs() <= ef.abs() * 1e-15);
            binom = binom * BigInt::from(40 - k) / BigInt::from(k + 1);
        }
    }

    #[test]
    fn undersized_bound_is_detected() {
        let len = 41;
        let err = Residues::compute(20, len, Parallelism::Sequential, |pr| {
            // 3^(40 n) overflows a 20-bit bound immediately
            let base = vec![1, 3];
            pow_trunc(&base, 200, len, pr)
        });
        assert!(err.is_err());
    }

    #[test]
    fn growth_bound_arithmetic() {
        let b = GrowthBound::new(2.0, 6.0);
        assert_eq!(b.pow(1), b);
        let sq = b.pow(2);
        assert_eq!(sq.exponent, 13.0);
        assert!((sq.log2_scale - 3.0).abs() < 1e-12);
    }
}
