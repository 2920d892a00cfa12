//! Elementary multiplicative number theory.
//!
//! Factorization is trial division against a cached prime list up to 10^6,
//! which covers every integer up to 10^12 (far beyond any scan limit used here).

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::One;

use crate::{Error, Result};

const TRIAL_PRIME_LIMIT: u64 = 1_000_000;

/// Square-free indicator over `1..=limit`, stored as a packed bitmap.
#[derive(Clone, Debug)]
pub struct SquarefreeTable {
    limit: u64,
    bits: Vec<u64>,
}

impl SquarefreeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// True iff `n` is square-free. Panics if `n == 0` or `n > limit`.
    #[inline]
    pub fn is_squarefree(&self, n: u64) -> bool {
        assert!(n >= 1 && n <= self.limit, "index {n} outside 1..={}", self.limit);
        self.bits[(n >> 6) as usize] >> (n & 63) & 1 == 1
    }

    /// Number of square-free integers in `1..=x` (`x` clamped to the limit).
    pub fn count_up_to(&self, x: u64) -> u64 {
        let x = x.min(self.limit);
        if x == 0 {
            return 0;
        }
        let full = (x >> 6) as usize;
        let mut count: u64 = self.bits[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rem = x & 63;
        let mask = if rem == 63 { u64::MAX } else { (1u64 << (rem + 1)) - 1 };
        count += (self.bits[full] & mask).count_ones() as u64;
        count
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.limit).filter(move |&n| self.is_squarefree(n))
    }
}

/// Marks multiples of p² for every prime p ≤ √limit.
pub fn squarefree_sieve(limit: u64) -> Result<SquarefreeTable> {
    if limit == 0 {
        return Err(Error::invalid("square-free sieve limit must be at least 1"));
    }
    let words = (limit as usize >> 6) + 1;
    let mut bits = vec![u64::MAX; words];
    bits[0] &= !1; // index 0 is not part of the table
    let root = isqrt(limit);
    for p in primes_up_to(root) {
        let sq = p * p;
        let mut m = sq;
        while m <= limit {
            bits[(m >> 6) as usize] &= !(1u64 << (m & 63));
            m += sq;
        }
    }
    // clear bits past the limit so popcounts stay honest
    let last = limit & 63;
    if last != 63 {
        bits[words - 1] &= (1u64 << (last + 1)) - 1;
    }
    Ok(SquarefreeTable { limit, bits })
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::with_capacity(if n > 10 { (n as f64 / (n as f64).ln() * 1.3) as usize } else { 4 });
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn trial_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TRIAL_PRIME_LIMIT))
}

/// Prime factorization as `(p, e)` pairs in increasing `p`.
pub fn factorize(mut n: u64) -> Result<Vec<(u64, u32)>> {
    if n == 0 {
        return Err(Error::invalid("cannot factor 0"));
    }
    let mut out = Vec::new();
    for &p in trial_primes() {
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        if n > TRIAL_PRIME_LIMIT * TRIAL_PRIME_LIMIT {
            return Err(Error::invalid(format!("{n} exceeds the trial-division range")));
        }
        out.push((n, 1));
    }
    Ok(out)
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && matches!(factorize(n).as_deref(), Ok([(_, 1)]))
}

pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::invalid("mobius(0) is undefined"));
    }
    let f = factorize(n)?;
    if f.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if f.len() % 2 == 0 { 1 } else { -1 })
}

/// Number of distinct prime divisors.
pub fn nu(n: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::invalid("nu(0) is undefined"));
    }
    Ok(factorize(n)?.len() as u32)
}

/// σ_w(n) = Σ_{d | n} d^w, exact.
pub fn divisor_power_sum(n: u64, w: u32) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::invalid("divisor_power_sum needs n >= 1"));
    }
    let mut total = BigUint::one();
    for (p, e) in factorize(n)? {
        let pw = BigUint::from(p).pow(w);
        let mut term = BigUint::one();
        let mut acc = BigUint::one();
        for _ in 0..e {
            term *= &pw;
            acc += &term;
        }
        total *= acc;
    }
    Ok(total)
}

/// All divisors of `n` in increasing order.
pub fn divisors(n: u64) -> Result<Vec<u64>> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n)? {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Square-free divisors of `n` in increasing order; always `2^nu(n)` of them.
pub fn squarefree_divisors(n: u64) -> Result<Vec<u64>> {
    let mut out = vec![1u64];
    for (p, _) in factorize(n)? {
        let len = out.len();
        for i in 0..len {
            out.push(out[i] * p);
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::Integer::gcd(&a, &b)
}

pub fn is_squarefree(n: u64) -> Result<bool> {
    Ok(mobius(n)? != 0)
}
