//! Rankin–Selberg analytics: Satake parameters, local factors, truncated Euler
//! products, weighted square-free sums, the Mellin-inversion oracle and the
//! residue constant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, primes_up_to, squarefree_sieve};
use crate::modforms::NewformRecord;
use crate::par::{map_chunks, map_collect, Parallelism};
use crate::weights::{mellin, SmoothWeight};
use crate::{Error, Result};

pub mod exact;

const PRIME_BLOCK: usize = 4096;
const SUM_CHUNK: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatakePair {
    pub p: u64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
}

impl SatakePair {
    pub fn params(&self) -> [Complex64; 2] {
        [self.alpha1, self.alpha2]
    }
}

/// Roots of x² − λ_p x + χ(p), ordered by (real part, imaginary part).
pub fn satake(lambda_p: Complex64, chi_p: Complex64, p: u64) -> SatakePair {
    let disc = (lambda_p * lambda_p - chi_p * 4.0).sqrt();
    let (a, b) = ((lambda_p + disc) * 0.5, (lambda_p - disc) * 0.5);
    // recover a root lost to cancellation from the product of the roots
    let (a, b) = if b.norm() < 1e-4 * a.norm() {
        (a, chi_p / a)
    } else if a.norm() < 1e-4 * b.norm() {
        (chi_p / b, b)
    } else {
        (a, b)
    };
    let (alpha1, alpha2) = if (a.re, a.im) <= (b.re, b.im) { (a, b) } else { (b, a) };
    SatakePair { p, alpha1, alpha2 }
}

fn satake_of(f: &NewformRecord, p: u64) -> Result<SatakePair> {
    Ok(satake(f.lambda(p as usize)?, f.chi(p), p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerProductEstimate {
    pub s: Complex64,
    pub cutoff: u64,
    pub value: Complex64,
    /// Heuristic bound on |log(true / truncated)|, from |log factor| <= 8 p^{-σ}.
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMethod {
    Direct,
    Contour,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSumResult {
    pub x: f64,
    pub value: Complex64,
    pub terms: usize,
    pub method: SumMethod,
    /// Estimated truncation error in t (contour method only; 0 for direct sums).
    pub tail_estimate: f64,
}

/// (1 − p^{−2s}) for p ∤ N, Π_{i,j}(1 − α_i β̄_j p^{−s}) for p | N.
pub fn euler_factor_h(p: u64, s: Complex64, level: u64, sat_f: &SatakePair, sat_g: &SatakePair) -> Complex64 {
    let x = p_pow_neg(p, s);
    if level % p != 0 {
        return Complex64::new(1.0, 0.0) - x * x;
    }
    let mut prod = Complex64::new(1.0, 0.0);
    for a in sat_f.params() {
        for b in sat_g.params() {
            prod *= Complex64::new(1.0, 0.0) - a * b.conj() * x;
        }
    }
    prod
}

/// p^{-s}.
fn p_pow_neg(p: u64, s: Complex64) -> Complex64 {
    (-s * (p as f64).ln()).exp()
}

/// Coefficients of Π_{i,j}(1 − α_i β̄_j X), degree 4.
pub fn local_rs_polynomial(sat_f: &SatakePair, sat_g: &SatakePair) -> [Complex64; 5] {
    let mut c = [Complex64::new(0.0, 0.0); 5];
    c[0] = Complex64::new(1.0, 0.0);
    let mut deg = 0;
    for a in sat_f.params() {
        for b in sat_g.params() {
            let r = a * b.conj();
            for i in (1..=deg + 1).rev() {
                c[i] = c[i] - r * c[i - 1];
            }
            deg += 1;
        }
    }
    c
}

/// H₁,p(s) = (1 + λ_f(p) λ̄_g(p) X)(1 − X²)^{−1} Π(1 − α_i β̄_j X) at X = p^{−s}, for p ∤ N.
pub fn euler_factor_h1(p: u64, s: Complex64, lambda_f_p: Complex64, lambda_g_p: Complex64, sat_f: &SatakePair, sat_g: &SatakePair) -> Result<Complex64> {
    let x = p_pow_neg(p, s);
    if x.norm() >= 1.0 {
        return Err(Error::invalid(format!("|p^-s| = {} >= 1 at p = {p}", x.norm())));
    }
    let poly = local_rs_polynomial(sat_f, sat_g);
    let val = poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c);
    let one = Complex64::new(1.0, 0.0);
    Ok((one + lambda_f_p * lambda_g_p.conj() * x) / (one - x * x) * val)
}

/// Product of `factor(p)` over primes p <= cutoff, in fixed blocks combined in order.
fn euler_product<F>(cutoff: u64, par: Parallelism, factor: F) -> Result<Complex64>
where
    F: Fn(u64) -> Result<Complex64> + Sync + Send,
{
    let primes = primes_up_to(cutoff);
    let blocks = map_chunks(0..primes.len(), PRIME_BLOCK, par, |lo, hi| {
        let mut acc = Complex64::new(1.0, 0.0);
        for &p in &primes[lo..hi] {
            acc *= factor(p)?;
        }
        Ok(acc)
    });
    blocks.into_iter().try_fold(Complex64::new(1.0, 0.0), |acc, b: Result<Complex64>| Ok(acc * b?))
}

/// Π_{p<=P} H_p(s).
pub fn h_product(f: &NewformRecord, g: &NewformRecord, s: Complex64, level: u64, cutoff: u64, par: Parallelism) -> Result<Complex64> {
    euler_product(cutoff, par, |p| {
        if level % p != 0 {
            let x = p_pow_neg(p, s);
            return Ok(Complex64::new(1.0, 0.0) - x * x);
        }
        Ok(euler_factor_h(p, s, level, &satake_of(f, p)?, &satake_of(g, p)?))
    })
}

/// Π_{p<=P, p∤N} H₁,p(s).
pub fn h1_product(f: &NewformRecord, g: &NewformRecord, s: Complex64, level: u64, cutoff: u64, par: Parallelism) -> Result<Complex64> {
    euler_product(cutoff, par, |p| {
        if level % p == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        euler_factor_h1(p, s, f.lambda(p as usize)?, g.lambda(p as usize)?, &satake_of(f, p)?, &satake_of(g, p)?)
    })
}

/// Π_{p<=P} Π_{i,j}(1 − α_i β̄_j p^{−s})^{−1}, for Re s >= 1.05.
pub fn rs_lfun_truncated(f: &NewformRecord, g: &NewformRecord, s: Complex64, cutoff: u64, par: Parallelism) -> Result<EulerProductEstimate> {
    if s.re < 1.05 {
        return Err(Error::invalid(format!("Re s = {} is below 1.05", s.re)));
    }
    if cutoff < 2 {
        return Err(Error::invalid("prime cutoff must be at least 2"));
    }
    let needed = primes_up_to(cutoff).last().copied().unwrap_or(2) as usize;
    for r in [f, g] {
        if r.prec() < needed {
            return Err(Error::PrecisionExceeded { requested: needed, available: r.prec() });
        }
    }
    let value = euler_product(cutoff, par, |p| {
        let x = p_pow_neg(p, s);
        let poly = local_rs_polynomial(&satake_of(f, p)?, &satake_of(g, p)?);
        Ok(Complex64::new(1.0, 0.0) / poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c))
    })?;
    Ok(EulerProductEstimate { s, cutoff, value, tail_bound: rs_tail_bound(s.re, cutoff) })
}

/// 8 P^{1−σ} / ((σ − 1) ln P).
pub fn rs_tail_bound(sigma: f64, cutoff: u64) -> f64 {
    let p = cutoff as f64;
    8.0 * p.powf(1.0 - sigma) / ((sigma - 1.0) * p.ln())
}

/// (1 + |t|)⁴ k² N³, implied constant 1 (bound shape only).
pub fn analytic_conductor_bound(k: u32, level: u64, t: f64) -> f64 {
    (1.0 + t.abs()).powi(4) * (k as f64).powi(2) * (level as f64).powi(3)
}

/// q(f⊗ḡ, s)^{(1−σ)/2+ε} for 1/2 <= σ <= 1, implied constant 1.
pub fn convexity_bound(k: u32, level: u64, s: Complex64, eps: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&s.re) {
        return Err(Error::invalid(format!("σ = {} outside [1/2, 1]", s.re)));
    }
    Ok(analytic_conductor_bound(k, level, s.im).powf((1.0 - s.re) / 2.0 + eps))
}

/// Σ over square-free n coprime to N with x/2 < n < x of λ_f(n) conj(λ_g(n)) ω(n/x).
pub fn direct_weighted_sum(f: &NewformRecord, g: &NewformRecord, w: &SmoothWeight, x: f64, level: u64, par: Parallelism) -> Result<WeightedSumResult> {
    if !(x >= 2.0 && x.is_finite()) {
        return Err(Error::invalid(format!("x = {x} must be at least 2")));
    }
    let hi = x.ceil() as u64 - 1;
    let lo = (x / 2.0).floor() as u64 + 1;
    for r in [f, g] {
        if r.prec() < hi as usize {
            return Err(Error::PrecisionExceeded { requested: hi as usize, available: r.prec() });
        }
    }
    let table = squarefree_sieve(hi.max(1))?;
    let parts = map_chunks(lo as usize..hi as usize + 1, SUM_CHUNK, par, |a, b| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for n in a..b {
            let n64 = n as u64;
            if !table.is_squarefree(n64) || gcd(n64, level) != 1 {
                continue;
            }
            count += 1;
            let wt = w.eval(n as f64 / x);
            if wt != 0.0 {
                acc += f.lambdas()[n] * g.lambdas()[n].conj() * wt;
            }
        }
        (acc, count)
    });
    let (value, terms) = parts.into_iter().fold((Complex64::new(0.0, 0.0), 0), |(v, c), (pv, pc)| (v + pv, c + pc));
    Ok(WeightedSumResult { x, value, terms, method: SumMethod::Direct, tail_estimate: 0.0 })
}

/// Parameters of the contour oracle beyond (f, g, ω, x, N).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourParams {
    pub sigma0: f64,
    pub t_max: f64,
    pub p_cutoff: u64,
}

/// (1/2πi) ∫_{(σ0)} L♭(f×ḡ, s) x^s ω̃(s) ds on |Im s| <= T by the trapezoidal rule, with
/// L♭ the square-free Dirichlet series truncated at P.
pub fn contour_sum_oracle(f: &NewformRecord, g: &NewformRecord, w: &SmoothWeight, x: f64, level: u64, params: ContourParams, par: Parallelism) -> Result<WeightedSumResult> {
    let ContourParams { sigma0, t_max, p_cutoff } = params;
    if sigma0 < 1.5 {
        return Err(Error::invalid(format!("σ0 = {sigma0} is below 1.5")));
    }
    if !(x >= 1.0) || (p_cutoff as f64) < x {
        return Err(Error::invalid("contour oracle needs x >= 1 and P >= x"));
    }
    if !(t_max > 0.0) {
        return Err(Error::invalid("contour height must be positive"));
    }
    for r in [f, g] {
        if r.prec() < p_cutoff as usize {
            return Err(Error::PrecisionExceeded { requested: p_cutoff as usize, available: r.prec() });
        }
    }
    let table = squarefree_sieve(p_cutoff)?;
    // Dirichlet terms c_n (x/n)^{σ0} with phase t·ln(x/n)
    let terms: Vec<(f64, Complex64)> = (1..=p_cutoff)
        .filter(|&n| table.is_squarefree(n) && gcd(n, level) == 1)
        .map(|n| {
            let c = f.lambdas()[n as usize] * g.lambdas()[n as usize].conj();
            let u = (x / n as f64).ln();
            (u, c * (sigma0 * u).exp())
        })
        .filter(|(_, c)| c.norm() != 0.0)
        .collect();
    let abs_mass: f64 = terms.iter().map(|(_, c)| c.norm()).sum();
    // frequencies ln(xy/n) lie in [ln(x/2P), ln x]; step keeps Poisson aliases out
    let spread = x.ln().max(0.0) + (2.0 * p_cutoff as f64 / x).ln().max(0.0) + 2.0;
    let h = 2.0 * std::f64::consts::PI / spread;
    let m = (t_max / h).ceil() as usize;
    let tail_m = m + (m / 2).max(8);
    let integrand = |k: usize| -> Result<(Complex64, Complex64, f64)> {
        let t = k as f64 * h;
        let mv = mellin(w, Complex64::new(sigma0, t))?.value;
        // G(t) and G(−t), using ω̃(σ − it) = conj ω̃(σ + it)
        let (mut plus, mut minus) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &(u, c) in &terms {
            let e = Complex64::from_polar(1.0, t * u);
            plus += c * e;
            minus += c * e.conj();
        }
        Ok((plus * mv, minus * mv.conj(), mv.norm()))
    };
    let values = map_collect(tail_m + 1, par, integrand).into_iter().collect::<Result<Vec<_>>>()?;
    let mut sum = values[0].0;
    for v in &values[1..=m] {
        sum += v.0 + v.1;
    }
    let value = sum * (h / (2.0 * std::f64::consts::PI));
    let tail: f64 = values[m + 1..].iter().map(|v| 2.0 * abs_mass * v.2).sum::<f64>() * h / (2.0 * std::f64::consts::PI);
    let tolerance = 1e-6 * x.max(1.0);
    if tail > tolerance {
        return Err(Error::QuadratureFailure(format!("t-tail estimate {tail:e} exceeds {tolerance:e}; raise T")));
    }
    Ok(WeightedSumResult { x, value, terms: terms.len(), method: SumMethod::Contour, tail_estimate: tail })
}

/// ζ(s) for real s > 1 by Euler–Maclaurin summation.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::invalid("ζ(s) needs s > 1"));
    }
    const N: f64 = 12.0;
    // B_{2k} / (2k)!
    const B: [f64; 7] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0, 1.0 / 47900160.0, -691.0 / 1307674368000.0, 1.0 / 74724249600.0];
    let mut sum: f64 = (1..N as u64).map(|n| (n as f64).powf(-s)).sum();
    sum += N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    let mut rising = s; // s(s+1)...(s+2k-2)
    let mut npow = N.powf(-s - 1.0);
    for (k, b) in B.iter().enumerate() {
        sum += b * rising * npow;
        let j = 2.0 * k as f64;
        rising *= (s + j + 1.0) * (s + j + 2.0);
        npow /= N * N;
    }
    Ok(sum)
}

/// Π_{p<=P}(1 − p^{−s})^{−1}.
pub fn zeta_partial(s: f64, cutoff: u64) -> f64 {
    primes_up_to(cutoff).iter().map(|&p| 1.0 / (1.0 - (p as f64).powf(-s))).product()
}

pub const DEFAULT_DELTA_GRID: [f64; 6] = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05];

/// Samples and fit behind a residue estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueFit {
    /// (δ, δ·L_P(f⊗f̄, 1+δ)·ζ(1+δ)/ζ_P(1+δ)).
    pub samples: Vec<(f64, f64)>,
    /// Quadratic a + bδ + cδ².
    pub coefficients: [f64; 3],
    pub residue: f64,
}

/// Res_{s=1} L(f⊗f̄, s), extrapolated from the truncated products at s = 1 + δ.
/// Each sample is multiplied by ζ(1+δ)/ζ_P(1+δ) to restore the pole part lost to
/// truncation, then a least-squares quadratic in δ is evaluated at δ = 0.
pub fn residue_estimate(f: &NewformRecord, level: u64, cutoff: u64, delta_grid: &[f64], par: Parallelism) -> Result<ResidueFit> {
    if delta_grid.len() < 4 {
        return Err(Error::invalid("residue extrapolation needs at least 4 δ values"));
    }
    if delta_grid.iter().any(|d| !(0.05..=0.5).contains(d)) || delta_grid.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::invalid("δ grid must be decreasing within [0.05, 0.5]"));
    }
    let _ = level;
    let mut samples = Vec::with_capacity(delta_grid.len());
    for &d in delta_grid {
        let l = rs_lfun_truncated(f, f, Complex64::new(1.0 + d, 0.0), cutoff, par)?.value.re;
        let correction = zeta(1.0 + d)? / zeta_partial(1.0 + d, cutoff);
        samples.push((d, d * l * correction));
    }
    let coefficients = quadratic_fit(&samples);
    let residue = coefficients[0];
    if !(residue > 0.0) {
        return Err(Error::EstimationFailure(format!("extrapolated residue {residue} is not positive; increase P")));
    }
    Ok(ResidueFit { samples, coefficients, residue })
}

fn quadratic_fit(samples: &[(f64, f64)]) -> [f64; 3] {
    let a = nalgebra::DMatrix::from_fn(samples.len(), 3, |i, j| samples[i].0.powi(j as i32));
    let b = nalgebra::DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let sol = a.svd(true, true).solve(&b, 1e-14).expect("SVD with both factors");
    [sol[0], sol[1], sol[2]]
}

/// Components of C(f, ω) = H(1)·H₁(1)·Res L(f⊗f̄)·ω̃(1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CConstant {
    pub h_at_one: f64,
    pub h1_at_one: f64,
    pub residue: ResidueFit,
    pub mellin_at_one: f64,
    pub value: f64,
}

pub fn c_constant(f: &NewformRecord, w: &SmoothWeight, level: u64, cutoff: u64, par: Parallelism) -> Result<CConstant> {
    let one = Complex64::new(1.0, 0.0);
    let h = h_product(f, f, one, level, cutoff, par)?.re;
    let h1 = h1_product(f, f, one, level, cutoff, par)?.re;
    let residue = residue_estimate(f, level, cutoff, &DEFAULT_DELTA_GRID, par)?;
    let m1 = mellin(w, one)?.value.re;
    let value = h * h1 * residue.residue * m1;
    if !(value > 0.0) {
        return Err(Error::EstimationFailure(format!("C(f, ω) = {value} is not positive")));
    }
    Ok(CConstant { h_at_one: h, h1_at_one: h1, residue, mellin_at_one: m1, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::CharacterTable;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn toy(level: u64, lambda: Vec<f64>) -> NewformRecord {
        let chi = CharacterTable::trivial(level);
        NewformRecord::new(level, 12, chi, lambda.into_iter().map(|v| c(v, 0.0)).collect(), crate::modforms::RecordSource::Computed, "toy").unwrap()
    }

    #[test]
    fn satake_examples() {
        let s = satake(c(2.0, 0.0), c(1.0, 0.0), 3);
        assert!((s.alpha1 - c(1.0, 0.0)).norm() < 1e-7 && (s.alpha2 - c(1.0, 0.0)).norm() < 1e-7);
        let s = satake(c(0.7, -0.2), c(0.0, 0.0), 11);
        assert_eq!(s.alpha1, c(0.0, 0.0));
        assert!((s.alpha2 - c(0.7, -0.2)).norm() < 1e-15);
        let l2 = -24.0 / 2f64.powf(5.5);
        let s = satake(c(l2, 0.0), c(1.0, 0.0), 2);
        assert!((s.alpha1.norm() - 1.0).abs() < 1e-14 && (s.alpha2.norm() - 1.0).abs() < 1e-14);
        assert!((s.alpha1 - s.alpha2.conj()).norm() < 1e-14);
        assert!(s.alpha1.im < s.alpha2.im);
        assert!((s.alpha1 + s.alpha2 - c(l2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn h_factor_examples() {
        let z = satake(c(0.0, 0.0), c(0.0, 0.0), 2);
        assert!((euler_factor_h(2, c(1.0, 0.0), 1, &z, &z) - c(0.75, 0.0)).norm() < 1e-15);
        let (lf, lg) = (c(0.4, 0.0), c(-0.9, 0.0));
        let (sf, sg) = (satake(lf, c(0.0, 0.0), 11), satake(lg, c(0.0, 0.0), 11));
        let s = c(1.3, 0.7);
        let expect = c(1.0, 0.0) - lf * lg.conj() * (-s * 11f64.ln()).exp();
        assert!((euler_factor_h(11, s, 11, &sf, &sg) - expect).norm() < 1e-15);
    }

    #[test]
    fn h1_examples() {
        let l = -24.0 / 2f64.powf(5.5);
        let sp = satake(c(l, 0.0), c(1.0, 0.0), 101);
        let s = c(2.0, 0.0);
        let v = euler_factor_h1(101, s, c(l, 0.0), c(l, 0.0), &sp, &sp).unwrap();
        let x = 101f64.powi(-2);
        assert!((v - c(1.0, 0.0)).norm() <= 10.0 * x * x);
        // log H₁ = O(X²): the ratio settles as X → 0
        let r = (v.ln() / (x * x)).re;
        assert!((r + (l * l - 1.0).powi(2)).abs() < 1e-3);
        assert!(matches!(euler_factor_h1(2, c(0.0, 3.0), c(l, 0.0), c(l, 0.0), &sp, &sp), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn local_polynomial_contains_zeta_factor_on_unit_circle() {
        for (i, p) in primes_up_to(80).into_iter().enumerate() {
            let lam = 2.0 * (0.3 + 0.7 * i as f64).cos();
            let sp = satake(c(lam, 0.0), c(1.0, 0.0), p);
            let poly = local_rs_polynomial(&sp, &sp);
            // P(1) = 0 means (1 − X) divides P(X)
            let at_one: Complex64 = poly.iter().sum();
            assert!(at_one.norm() < 1e-12, "p = {p}");
            assert!((poly[1] + c(lam * lam, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn conductor_and_convexity() {
        assert_eq!(analytic_conductor_bound(12, 1, 0.0), 144.0);
        assert_eq!(analytic_conductor_bound(12, 1, 1.0) / analytic_conductor_bound(12, 1, 0.0), 16.0);
        assert_eq!(analytic_conductor_bound(12, 11, 0.0), 191664.0);
        assert!((convexity_bound(12, 1, c(0.5, 0.0), 0.0).unwrap() - 3.4641016151).abs() < 1e-9);
        assert!((convexity_bound(12, 1, c(1.0, 0.0), 1e-6).unwrap() - 1.0).abs() < 1e-4);
        let mut last = f64::INFINITY;
        for i in 0..=10 {
            let v = convexity_bound(24, 5, c(0.5 + 0.05 * i as f64, 3.0), 0.01).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(convexity_bound(12, 1, c(1.2, 0.0), 0.0).is_err());
        assert!(convexity_bound(12, 1, c(0.4, 0.0), 0.0).is_err());
    }

    #[test]
    fn direct_sum_index_set() {
        let f = toy(1, vec![0.0, 1.0, -0.5303300858899106, 0.3, 0.25, 0.1]);
        let w = SmoothWeight::default();
        let r = direct_weighted_sum(&f, &f, &w, 3.0, 1, Parallelism::Sequential).unwrap();
        assert_eq!(r.terms, 1);
        assert!((r.value.re - 0.5303300858899106f64.powi(2) * w.eval(2.0 / 3.0)).abs() < 1e-15);
        let r = direct_weighted_sum(&f, &f, &w, 4.0, 1, Parallelism::Sequential).unwrap();
        assert_eq!(r.terms, 1);
        assert!((r.value.re - 0.09 * w.eval(0.75)).abs() < 1e-15);
        assert!(matches!(direct_weighted_sum(&f, &f, &w, 7.5, 1, Parallelism::Sequential), Err(Error::PrecisionExceeded { .. })));
        assert!(direct_weighted_sum(&f, &f, &w, 1.5, 1, Parallelism::Sequential).is_err());
    }

    #[test]
    fn zeta_against_closed_forms() {
        let pi = std::f64::consts::PI;
        assert!((zeta(2.0).unwrap() - pi * pi / 6.0).abs() < 1e-14);
        assert!((zeta(4.0).unwrap() - pi.powi(4) / 90.0).abs() < 1e-14);
        // ζ(s) − 1/(s − 1) → γ
        let eps = 2f64.powi(-20);
        assert!((zeta(1.0 + eps).unwrap() - 1.0 / eps - 0.5772156649).abs() < 1e-5);
        assert!(zeta(1.0).is_err());
    }

    #[test]
    fn residue_grid_validation() {
        let f = toy(1, vec![0.0; 20]);
        assert!(matches!(residue_estimate(&f, 1, 10, &[0.5, 0.3, 0.1], Parallelism::Sequential), Err(Error::InvalidArgument(_))));
        assert!(matches!(residue_estimate(&f, 1, 10, &[0.5, 0.3, 0.1, 0.01], Parallelism::Sequential), Err(Error::InvalidArgument(_))));
        assert!(matches!(residue_estimate(&f, 1, 10, &[0.1, 0.2, 0.3, 0.4], Parallelism::Sequential), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quadratic_fit_recovers_polynomial() {
        let samples: Vec<(f64, f64)> = DEFAULT_DELTA_GRID.iter().map(|&d| (d, 0.6 - 0.2 * d + 1.5 * d * d)).collect();
        let fit = quadratic_fit(&samples);
        assert!((fit[0] - 0.6).abs() < 1e-12 && (fit[1] + 0.2).abs() < 1e-12 && (fit[2] - 1.5).abs() < 1e-12);
    }
}
