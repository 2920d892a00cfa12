use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::CharacterTable;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSource {
    Computed,
    Ingested,
}

/// A normalized Hecke newform: λ(n) = a(n) / n^((k-1)/2), with λ(1) = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct NewformRecord {
    pub level: u64,
    pub weight: u32,
    pub character: CharacterTable,
    /// `lambda[n]` for `n = 0..=prec`; index 0 is unused and holds 0.
    lambda: Vec<Complex64>,
    /// Exact integral coefficients `a(0..len)`, when the eigenvalues are rational.
    exact: Option<Vec<BigInt>>,
    pub source: RecordSource,
    pub label: String,
}

impl NewformRecord {
    pub fn new(level: u64, weight: u32, character: CharacterTable, lambda: Vec<Complex64>, source: RecordSource, label: impl Into<String>) -> Result<Self> {
        if lambda.len() < 2 {
            return Err(Error::invalid("a newform record needs at least λ(1)"));
        }
        if character.modulus() != level {
            return Err(Error::invalid(format!("character modulus {} differs from level {level}", character.modulus())));
        }
        Ok(NewformRecord { level, weight, character, lambda, exact: None, source, label: label.into() })
    }

    /// Builds a record from exact integral coefficients `a(0..prec)` with `a(1) = 1`.
    pub fn from_integral(level: u64, weight: u32, character: CharacterTable, coeffs: Vec<BigInt>, source: RecordSource, label: impl Into<String>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::invalid("a newform record needs at least a(1)"));
        }
        let mut lambda = Vec::with_capacity(coeffs.len());
        lambda.push(Complex64::new(0.0, 0.0));
        for (n, a) in coeffs.iter().enumerate().skip(1) {
            lambda.push(Complex64::new(normalize_exact(&BigRational::from_integer(a.clone()), n as u64, weight), 0.0));
        }
        let mut rec = Self::new(level, weight, character, lambda, source, label)?;
        rec.exact = Some(coeffs);
        Ok(rec)
    }

    pub(crate) fn set_exact(&mut self, coeffs: Vec<BigInt>) {
        self.exact = Some(coeffs);
    }

    /// Number of known λ values (λ(1..=prec)).
    pub fn prec(&self) -> usize {
        self.lambda.len() - 1
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambda
    }

    pub fn lambda(&self, n: usize) -> Result<Complex64> {
        if n == 0 || n > self.prec() {
            return Err(Error::PrecisionExceeded { requested: n, available: self.prec() });
        }
        Ok(self.lambda[n])
    }

    pub fn exact(&self) -> Option<&[BigInt]> {
        self.exact.as_deref()
    }

    /// Exact a(n), if known.
    pub fn exact_coefficient(&self, n: usize) -> Option<&BigInt> {
        self.exact.as_ref().and_then(|e| e.get(n))
    }

    /// a(n) = λ(n)·n^((k-1)/2), exact when available.
    pub fn coefficient(&self, n: usize) -> Result<Complex64> {
        if let Some(a) = self.exact_coefficient(n) {
            return Ok(Complex64::new(a.to_f64().unwrap_or(f64::NAN), 0.0));
        }
        Ok(self.lambda(n)? * normalization_factor(n as u64, self.weight))
    }

    /// The character value χ(n) of the ambient character.
    pub fn chi(&self, n: u64) -> Complex64 {
        self.character.value(n)
    }

    pub fn truncated(&self, prec: usize) -> NewformRecord {
        let mut r = self.clone();
        r.lambda.truncate(prec.max(1) + 1);
        if let Some(e) = r.exact.as_mut() {
            e.truncate(prec.max(1) + 1);
        }
        r
    }
}

/// n^((k-1)/2) in double precision: an exact integer power times at most one square root.
pub fn normalization_factor(n: u64, weight: u32) -> f64 {
    let e = weight.saturating_sub(1);
    let nf = n as f64;
    let base = nf.powi((e / 2) as i32);
    if e % 2 == 1 { base * nf.sqrt() } else { base }
}

/// a / n^((k-1)/2) with the integer-power part divided exactly.
pub fn normalize_exact(a: &BigRational, n: u64, weight: u32) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let e = weight.saturating_sub(1);
    let denom = BigInt::from(n).pow(e / 2);
    let q = (a / BigRational::from_integer(denom)).to_f64().unwrap_or(f64::NAN);
    if e % 2 == 1 { q / (n as f64).sqrt() } else { q }
}
