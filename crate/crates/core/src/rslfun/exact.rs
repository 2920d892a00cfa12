//! Exact local factors over Q(i), for symbolic checks on rational Satake data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }

    /// ((1 − t²)/(1 + t²), 2t/(1 + t²)), a rational point on the unit circle.
    pub fn unit_circle_point(t: &BigRational) -> Self {
        let t2 = t * t;
        let den = BigRational::one() + &t2;
        Self::new((BigRational::one() - &t2) / &den, (t * BigRational::from_integer(BigInt::from(2))) / den)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

fn mul_trunc(a: &[GaussianRational], b: &[GaussianRational], len: usize) -> Vec<GaussianRational> {
    let mut out = vec![GaussianRational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

/// Power series in X of (1 + λ_f λ̄_g X)(1 − X²)^{−1} Π_{i,j}(1 − α_i β̄_j X) to X^order,
/// with λ_f = α₁ + α₂ and λ_g = β₁ + β₂.
pub fn h1_series_exact(alpha: &[GaussianRational; 2], beta: &[GaussianRational; 2], order: usize) -> Vec<GaussianRational> {
    let len = order + 1;
    let lf = alpha[0].add(&alpha[1]);
    let lg = beta[0].add(&beta[1]);
    let mut series = vec![GaussianRational::one(), lf.mul(&lg.conj())];
    for a in alpha {
        for b in beta {
            series = mul_trunc(&series, &[GaussianRational::one(), GaussianRational::zero().sub(&a.mul(&b.conj()))], len);
        }
    }
    let geometric: Vec<GaussianRational> = (0..len).map(|i| if i % 2 == 0 { GaussianRational::one() } else { GaussianRational::zero() }).collect();
    let mut out = mul_trunc(&series, &geometric, len);
    out.resize(len, GaussianRational::zero());
    out
}
