//! Truncated q-expansions with exact rational coefficients.
//!
//! A [`QSeries`] of precision `prec` knows the coefficients of `q^0 .. q^(prec-1)`.
//! Binary operations truncate to the smaller precision and never extrapolate.
//!
//! Products clear denominators and multiply integer polynomials: schoolbook
//! convolution for short operands, Karatsuba above [`KARATSUBA_THRESHOLD`].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Precision above which [`QSeries::mul`] switches to Karatsuba.
pub const KARATSUBA_THRESHOLD: usize = 512;
const KARATSUBA_BASE: usize = 32;

/// Weight/level tag carried by series that represent modular forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormMeta {
    pub weight: u32,
    pub level: u64,
    pub cusp: bool,
}

#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<BigRational>,
    meta: Option<FormMeta>,
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = self.coeffs.iter().take(8).map(|c| c.to_string()).collect();
        write!(f, "QSeries(prec={}, [{}", self.prec(), shown.join(", "))?;
        if self.prec() > 8 {
            write!(f, ", ...")?;
        }
        write!(f, "], meta={:?})", self.meta)
    }
}

impl QSeries {
    /// Panics if `coeffs` is empty; every series knows at least its constant term.
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a q-series needs precision >= 1");
        QSeries { coeffs, meta: None }
    }

    pub fn from_integers<I, T>(coeffs: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Self::new(coeffs.into_iter().map(|c| BigRational::from_integer(c.into())).collect())
    }

    pub fn zero(prec: usize) -> Self {
        Self::new(vec![BigRational::zero(); prec.max(1)])
    }

    /// The unit series 1 + O(q^prec).
    pub fn one(prec: usize) -> Self {
        let mut s = Self::zero(prec);
        s.coeffs[0] = BigRational::one();
        s
    }

    /// q^shift + O(q^prec).
    pub fn monomial(shift: usize, prec: usize) -> Self {
        let mut s = Self::zero(prec);
        if shift < s.prec() {
            s.coeffs[shift] = BigRational::one();
        }
        s
    }

    pub fn prec(&self) -> usize {
        self.coeffs.len()
    }

    pub fn meta(&self) -> Option<FormMeta> {
        self.meta
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Attaches a weight/level tag, rejecting a cusp tag on a series with nonzero constant term.
    pub fn with_meta(mut self, meta: FormMeta) -> Result<Self> {
        if meta.cusp && !self.coeffs[0].is_zero() {
            return Err(Error::invalid("cusp form tag on a series with nonzero constant term"));
        }
        self.meta = Some(meta);
        Ok(self)
    }

    pub fn without_meta(mut self) -> Self {
        self.meta = None;
        self
    }

    /// Coefficient of q^n; asking beyond the known precision is an error, not zero.
    pub fn coefficient(&self, n: usize) -> Result<&BigRational> {
        self.coeffs.get(n).ok_or(Error::PrecisionExceeded { requested: n, available: self.prec() })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn truncate(&self, prec: usize) -> Self {
        let prec = prec.clamp(1, self.prec());
        QSeries { coeffs: self.coeffs[..prec].to_vec(), meta: self.meta }
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let prec = self.prec().min(other.prec());
        let coeffs = self.coeffs[..prec].iter().zip(&other.coeffs[..prec]).map(|(a, b)| a + b).collect();
        QSeries { coeffs, meta: merge_meta_add(self.meta, other.meta) }
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> QSeries {
        QSeries { coeffs: self.coeffs.iter().map(|c| -c).collect(), meta: self.meta }
    }

    pub fn scale(&self, c: &BigRational) -> QSeries {
        QSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect(), meta: self.meta }
    }

    /// Cauchy product truncated to the smaller precision.
    pub fn mul(&self, other: &QSeries) -> QSeries {
        let prec = self.prec().min(other.prec());
        let (a, da) = clear_denominators(&self.coeffs[..prec]);
        let (b, db) = clear_denominators(&other.coeffs[..prec]);
        let prod = if prec > KARATSUBA_THRESHOLD { karatsuba_trunc(&a, &b, prec) } else { schoolbook_trunc(&a, &b, prec) };
        let denom = da * db;
        let coeffs = prod.into_iter().map(|c| BigRational::new(c, denom.clone())).collect();
        QSeries { coeffs, meta: merge_meta_mul(self.meta, other.meta) }
    }

    /// Schoolbook product without the Karatsuba switch.
    pub fn mul_schoolbook(&self, other: &QSeries) -> QSeries {
        let prec = self.prec().min(other.prec());
        let (a, da) = clear_denominators(&self.coeffs[..prec]);
        let (b, db) = clear_denominators(&other.coeffs[..prec]);
        let denom = da * db;
        let coeffs = schoolbook_trunc(&a, &b, prec).into_iter().map(|c| BigRational::new(c, denom.clone())).collect();
        QSeries { coeffs, meta: merge_meta_mul(self.meta, other.meta) }
    }

    /// Repeated squaring; `e = 0` gives the unit series at this precision.
    pub fn pow(&self, e: u32) -> QSeries {
        let mut result = QSeries::one(self.prec());
        result.meta = self.meta.map(|m| FormMeta { weight: 0, level: m.level, cusp: false });
        if e == 0 {
            return result;
        }
        let mut base = self.clone();
        let mut e = e;
        let mut first = true;
        while e > 0 {
            if e & 1 == 1 {
                result = if first { base.clone() } else { result.mul(&base) };
                first = false;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Multiplies by q^shift, keeping the precision (known coefficients shift up, zeros fill in).
    pub fn shift(&self, shift: usize) -> QSeries {
        let prec = self.prec();
        let mut coeffs = vec![BigRational::zero(); prec];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i + shift < prec {
                coeffs[i + shift] = c.clone();
            }
        }
        QSeries { coeffs, meta: None }
    }

    /// Replaces q by q^d: b(n) = a(n/d) if d | n, else 0. Precision is `prec` (capped
    /// at what the input determines).
    pub fn substitute_power(&self, d: usize, prec: usize) -> Result<QSeries> {
        if d == 0 {
            return Err(Error::invalid("substitution power must be positive"));
        }
        let max = self.prec() * d;
        let prec = prec.min(max).max(1);
        let mut coeffs = vec![BigRational::zero(); prec];
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = i * d;
            if j >= prec {
                break;
            }
            coeffs[j] = c.clone();
        }
        Ok(QSeries { coeffs, meta: None })
    }

    /// Coefficients as `f64`, lossy.
    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational_to_f64).collect()
    }

    /// Largest denominator-free view: returns the integer coefficients if every coefficient is integral.
    pub fn integer_coeffs(&self) -> Option<Vec<BigInt>> {
        self.coeffs.iter().map(|c| c.is_integer().then(|| c.to_integer())).collect()
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

fn merge_meta_add(a: Option<FormMeta>, b: Option<FormMeta>) -> Option<FormMeta> {
    match (a, b) {
        (Some(x), Some(y)) if x.weight == y.weight && x.level == y.level => {
            Some(FormMeta { weight: x.weight, level: x.level, cusp: x.cusp && y.cusp })
        }
        _ => None,
    }
}

fn merge_meta_mul(a: Option<FormMeta>, b: Option<FormMeta>) -> Option<FormMeta> {
    match (a, b) {
        (Some(x), Some(y)) => Some(FormMeta {
            weight: x.weight + y.weight,
            level: x.level.lcm(&y.level),
            cusp: x.cusp || y.cusp,
        }),
        _ => None,
    }
}

/// Writes `coeffs = ints / denom` with a common positive denominator.
fn clear_denominators(coeffs: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let mut denom = BigInt::one();
    for c in coeffs {
        if !c.denom().is_one() {
            denom = denom.lcm(c.denom());
        }
    }
    let ints = coeffs
        .iter()
        .map(|c| if denom.is_one() { c.numer().clone() } else { c.numer() * (&denom / c.denom()) })
        .collect();
    (ints, denom)
}

fn schoolbook_trunc(a: &[BigInt], b: &[BigInt], prec: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); prec];
    for (i, x) in a.iter().enumerate().take(prec) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(prec - i) {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn karatsuba_trunc(a: &[BigInt], b: &[BigInt], prec: usize) -> Vec<BigInt> {
    let mut full = karatsuba(&a[..prec.min(a.len())], &b[..prec.min(b.len())]);
    full.resize(prec, BigInt::zero());
    full.truncate(prec);
    full
}

/// Full product of two integer polynomials.
pub(crate) fn karatsuba(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= KARATSUBA_BASE {
        let mut out = vec![BigInt::zero(); out_len];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let m = a.len().max(b.len()).div_ceil(2);
    let split = |p: &[BigInt]| -> (Vec<BigInt>, Vec<BigInt>) {
        let lo = p[..m.min(p.len())].to_vec();
        let hi = if p.len() > m { p[m..].to_vec() } else { Vec::new() };
        (lo, hi)
    };
    let (a0, a1) = split(a);
    let (b0, b1) = split(b);
    let z0 = karatsuba(&a0, &b0);
    let z2 = karatsuba(&a1, &b1);
    let sum = |x: &[BigInt], y: &[BigInt]| -> Vec<BigInt> {
        let n = x.len().max(y.len());
        (0..n)
            .map(|i| match (x.get(i), y.get(i)) {
                (Some(p), Some(q)) => p + q,
                (Some(p), None) | (None, Some(p)) => p.clone(),
                (None, None) => unreachable!(),
            })
            .collect()
    };
    let mut z1 = karatsuba(&sum(&a0, &a1), &sum(&b0, &b1));
    for (i, c) in z0.iter().enumerate() {
        z1[i] -= c;
    }
    for (i, c) in z2.iter().enumerate() {
        z1[i] -= c;
    }
    let mut out = vec![BigInt::zero(); out_len];
    for (i, c) in z0.into_iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in z1.into_iter().enumerate() {
        if i + m < out_len {
            out[i + m] += c;
        } else {
            debug_assert!(c.is_zero());
        }
    }
    for (i, c) in z2.into_iter().enumerate() {
        if i + 2 * m < out_len {
            out[i + 2 * m] += c;
        } else {
            debug_assert!(c.is_zero());
        }
    }
    out
}

/// Exact rational constructor shorthand.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> QSeries {
        QSeries::from_integers(v.iter().copied())
    }

    fn as_i64(s: &QSeries) -> Vec<i64> {
        s.coeffs().iter().map(|c| num_traits::ToPrimitive::to_i64(&c.to_integer()).unwrap()).collect()
    }

    /// Rational schoolbook oracle, independent of the integer-polynomial path.
    fn oracle_mul(a: &QSeries, b: &QSeries) -> Vec<BigRational> {
        let prec = a.prec().min(b.prec());
        (0..prec)
            .map(|n| (0..=n).fold(BigRational::zero(), |acc, i| acc + &a.coeffs()[i] * &b.coeffs()[n - i]))
            .collect()
    }

    #[test]
    fn mul_examples() {
        let a = ints(&[3, -1, 4, 1, 5]);
        assert_eq!(a.mul(&QSeries::one(5)), a);
        assert_eq!(as_i64(&ints(&[1, 1, 0]).mul(&ints(&[1, 1, 0]))), vec![1, 2, 1]);
        assert_eq!(as_i64(&ints(&[1, 1, 1, 1]).mul(&ints(&[1, 1, 1, 1]))), vec![1, 2, 3, 4]);
    }

    #[test]
    fn add_scale_examples() {
        let a = ints(&[2, 7, -3]);
        assert_eq!(a.add(&QSeries::zero(3)), a);
        assert!(a.scale(&BigRational::zero()).is_zero());
        assert_eq!(as_i64(&ints(&[1, 1]).add(&ints(&[1, -1]))), vec![2, 0]);
    }

    #[test]
    fn pow_examples() {
        let a = ints(&[5, 3, 2]);
        assert_eq!(a.pow(0), QSeries::one(3));
        assert_eq!(as_i64(&ints(&[1, -1, 0]).pow(2)), vec![1, -2, 1]);
        assert_eq!(as_i64(&ints(&[1, -1, 0]).pow(24)), vec![1, -24, 276]);
    }

    #[test]
    fn coefficient_access() {
        assert_eq!(QSeries::one(4).coefficient(0).unwrap(), &BigRational::one());
        let sq = ints(&[1, 1, 0]).pow(2);
        assert_eq!(sq.coefficient(1).unwrap(), &rat(2, 1));
        assert!(matches!(sq.coefficient(3), Err(Error::PrecisionExceeded { requested: 3, available: 3 })));
    }

    #[test]
    fn precision_is_minimum() {
        let a = ints(&[1, 2, 3, 4, 5]);
        let b = ints(&[1, 1]);
        assert_eq!(a.mul(&b).prec(), 2);
        assert_eq!(a.add(&b).prec(), 2);
    }

    #[test]
    fn cusp_tag_requires_zero_constant() {
        let meta = FormMeta { weight: 12, level: 1, cusp: true };
        assert!(ints(&[1, 2]).with_meta(meta).is_err());
        assert!(ints(&[0, 1]).with_meta(meta).is_ok());
    }

    #[test]
    fn karatsuba_matches_schoolbook_above_threshold() {
        let prec = KARATSUBA_THRESHOLD + 77;
        let a = QSeries::new((0..prec).map(|i| rat((i as i64 * 7919) % 113 - 56, 1 + (i as i64 % 5))).collect());
        let b = QSeries::from_integers((0..prec).map(|i| ((i * i) % 97) as i64 - 48));
        assert_eq!(a.mul(&b), a.mul_schoolbook(&b));
        assert_eq!(a.mul(&b).coeffs(), &oracle_mul(&a, &b)[..]);
    }

    #[test]
    fn substitute_power_support() {
        let a = ints(&[0, 1, -24, 252]);
        let l = a.substitute_power(2, 8).unwrap();
        assert_eq!(as_i64(&l), vec![0, 0, 1, 0, -24, 0, 252, 0]);
        assert_eq!(a.substitute_power(2, 100).unwrap().prec(), 8);
    }

    fn small_series(max_prec: usize) -> impl Strategy<Value = QSeries> {
        prop::collection::vec((-20i64..20, 1i64..6), 1..max_prec)
            .prop_map(|v| QSeries::new(v.into_iter().map(|(n, d)| rat(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn mul_matches_oracle(a in small_series(64), b in small_series(64)) {
            let prod = a.mul(&b);
            prop_assert_eq!(prod.coeffs(), &oracle_mul(&a, &b)[..]);
            prop_assert_eq!(prod.prec(), a.prec().min(b.prec()));
        }

        #[test]
        fn ring_axioms(a in small_series(12), b in small_series(12), c in small_series(12)) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }
    }
}
