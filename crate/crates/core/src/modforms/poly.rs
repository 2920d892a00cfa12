//! Exact rational polynomials: characteristic polynomials, square-freeness and
//! certified real-root isolation by Sturm sequences.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Coefficients in increasing degree; no trailing zeros except for the zero polynomial `[]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly(pub Vec<BigRational>);

impl Poly {
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        Poly(c)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.0.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect())
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    /// Remainder of Euclidean division. Panics on division by zero.
    pub fn rem(&self, d: &Poly) -> Poly {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.0[dd].clone();
        let mut r = self.0.clone();
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let q = &r[k] / &lead;
            for i in 0..=dd {
                let t = &q * &d.0[i];
                r[k - dd + i] -= t;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Poly::new(r)
    }

    pub fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// True iff the polynomial has no repeated complex roots.
    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree() == Some(0)
    }

    /// Cauchy bound: every root has absolute value below `1 + max |a_i / a_n|`.
    pub fn root_bound(&self) -> BigRational {
        let n = self.degree().expect("nonzero polynomial");
        let lead = self.0[n].abs();
        let max = self.0[..n].iter().map(|c| c.abs() / &lead).fold(BigRational::zero(), |m, v| if v > m { v } else { m });
        max + BigRational::one()
    }
}

/// Characteristic polynomial det(xI - A) by Faddeev–LeVerrier, exact over Q.
pub fn charpoly(a: &[Vec<BigRational>]) -> Poly {
    let n = a.len();
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        m = next;
        let am = mat_mul(a, &m);
        let trace = (0..n).fold(BigRational::zero(), |acc, i| acc + &am[i][i]);
        coeffs[n - k] = -trace / BigRational::from_integer(BigInt::from(k));
    }
    Poly::new(coeffs)
}

fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let mut out = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    out
}

/// A real root known to lie in `[lo, hi]`; `exact` is set when the root is rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
    pub exact: Option<BigRational>,
}

impl RootInterval {
    pub fn midpoint(&self) -> BigRational {
        match &self.exact {
            Some(r) => r.clone(),
            None => (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2)),
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

struct Sturm(Vec<Poly>);

impl Sturm {
    fn new(p: &Poly) -> Self {
        let mut chain = vec![p.clone(), p.derivative()];
        loop {
            let k = chain.len();
            if chain[k - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[k - 2].rem(&chain[k - 1]).neg();
            if r.is_zero() {
                break;
            }
            chain.push(r);
        }
        Sturm(chain)
    }

    fn sign_changes(&self, x: &BigRational) -> usize {
        let mut changes = 0;
        let mut last = 0i8;
        for p in &self.0 {
            let v = p.eval(x);
            let s = if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            };
            if s != 0 {
                if last != 0 && s != last {
                    changes += 1;
                }
                last = s;
            }
        }
        changes
    }

    /// Distinct roots in the half-open interval (a, b].
    fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        self.sign_changes(a) - self.sign_changes(b)
    }
}

/// Isolates every real root of a square-free polynomial and refines each to width `<= width`.
/// Rational roots are detected exactly.
pub fn real_roots(p: &Poly, width: &BigRational) -> Vec<RootInterval> {
    if p.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let sturm = Sturm::new(p);
    let bound = p.root_bound();
    let two = BigRational::from_integer(BigInt::from(2));
    let mut stack = vec![(-bound.clone(), bound)];
    let mut isolated = Vec::new();
    while let Some((a, b)) = stack.pop() {
        match sturm.count(&a, &b) {
            0 => {}
            1 => isolated.push((a, b)),
            _ => {
                let m = (&a + &b) / &two;
                stack.push((a, m.clone()));
                stack.push((m, b));
            }
        }
    }
    let mut roots: Vec<RootInterval> = isolated
        .into_iter()
        .map(|(mut a, mut b)| {
            // root in (a, b]; refine by bisection
            if p.eval(&b).is_zero() {
                return RootInterval { lo: b.clone(), hi: b.clone(), exact: Some(b) };
            }
            while &b - &a > *width {
                let m = (&a + &b) / &two;
                if p.eval(&m).is_zero() {
                    return RootInterval { lo: m.clone(), hi: m.clone(), exact: Some(m) };
                }
                if sturm.count(&a, &m) == 1 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let candidate = simplest_between(&a, &b);
            let exact = p.eval(&candidate).is_zero().then_some(candidate);
            RootInterval { lo: a, hi: b, exact }
        })
        .collect();
    roots.sort_by(|x, y| x.lo.cmp(&y.lo));
    roots
}

/// The rational with smallest denominator in `[lo, hi]` (continued-fraction construction).
pub fn simplest_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    debug_assert!(lo <= hi);
    let c = lo.ceil();
    if &c <= hi {
        // prefer the integer closest to zero
        let zero = BigRational::zero();
        if lo <= &zero && &zero <= hi {
            return zero;
        }
        return if lo.is_negative() { hi.floor() } else { c };
    }
    let f = lo.floor();
    let inner = simplest_between(&(hi - &f).recip(), &(lo - &f).recip());
    f + inner.recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::rat;

    fn p(c: &[i64]) -> Poly {
        Poly::new(c.iter().map(|&x| rat(x, 1)).collect())
    }

    #[test]
    fn charpoly_of_small_matrix() {
        // [[2, 1], [1, 3]] -> x^2 - 5x + 5
        let a = vec![vec![rat(2, 1), rat(1, 1)], vec![rat(1, 1), rat(3, 1)]];
        assert_eq!(charpoly(&a), p(&[5, -5, 1]));
    }

    #[test]
    fn squarefree_detection() {
        assert!(p(&[-2, 0, 1]).is_squarefree());
        assert!(!p(&[1, -2, 1]).is_squarefree());
    }

    #[test]
    fn isolates_irrational_and_rational_roots() {
        // (x^2 - 2)(x - 3) = x^3 - 3x^2 - 2x + 6
        let poly = p(&[6, -2, -3, 1]);
        let w = rat(1, 1_000_000_000_000);
        let roots = real_roots(&poly, &w);
        assert_eq!(roots.len(), 3);
        assert!(roots[0].exact.is_none());
        assert_eq!(roots[2].exact, Some(rat(3, 1)));
        let r2: f64 = num_traits::ToPrimitive::to_f64(&roots[1].midpoint()).unwrap();
        assert!((r2 - 2f64.sqrt()).abs() < 1e-11);
        assert!(roots.iter().all(|r| r.width() <= w));
    }

    #[test]
    fn simplest_rational() {
        assert_eq!(simplest_between(&rat(3, 10), &rat(4, 10)), rat(1, 3));
        assert_eq!(simplest_between(&rat(-7, 2), &rat(-3, 1)), rat(-3, 1));
        assert_eq!(simplest_between(&rat(-1, 2), &rat(1, 2)), rat(0, 1));
    }
}
