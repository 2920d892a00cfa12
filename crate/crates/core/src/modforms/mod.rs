//! Modular forms as q-expansions: level-1 Eisenstein monomials, Δ, eta quotients,
//! Hecke operators, eigenforms and their λ-normalized records.

mod character;
mod eigen;
mod long;
pub mod poly;
mod record;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub use character::CharacterTable;
pub use eigen::{eigenbasis, eigenforms, hecke_matrix, Eigenform, DEFAULT_PROBES};
pub use long::{builtin_labels, builtin_newform, builtin_newforms_for, eta_newform_long, level1_newforms, BuiltinEta, BUILTIN_ETA};
pub use record::{normalization_factor, normalize_exact, NewformRecord, RecordSource};

use crate::arith::is_prime;
use crate::linalg::rref;
use crate::qseries::{FormMeta, QSeries};
use crate::{Error, Result};

/// A space of modular forms with echelonized bases and (optionally) its newforms.
#[derive(Clone, Debug)]
pub struct FormSpace {
    pub weight: u32,
    pub level: u64,
    pub character: CharacterTable,
    /// Reduced echelon basis of the full space (level 1 only; empty otherwise).
    pub full_basis: Vec<QSeries>,
    /// Reduced echelon basis of the cuspidal subspace, ordered by pivot index.
    pub basis: Vec<QSeries>,
    pub newforms: Vec<NewformRecord>,
}

impl FormSpace {
    /// Builds a cuspidal space from arbitrary spanning forms, echelonizing them.
    pub fn from_cusp_forms(weight: u32, level: u64, character: CharacterTable, forms: &[QSeries]) -> Result<Self> {
        let meta = FormMeta { weight, level, cusp: true };
        let basis = echelon(forms)?.into_iter().map(|b| b.with_meta(meta)).collect::<Result<_>>()?;
        Ok(FormSpace { weight, level, character, full_basis: Vec::new(), basis, newforms: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn prec(&self) -> usize {
        self.basis.iter().map(QSeries::prec).min().unwrap_or(0)
    }

    /// Leading (pivot) index of each cuspidal basis element.
    pub fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|b| b.coeffs().iter().position(|c| !c.is_zero()).unwrap_or(usize::MAX)).collect()
    }
}

/// Reduced row echelon form of a list of series; errors if they are dependent.
fn echelon(forms: &[QSeries]) -> Result<Vec<QSeries>> {
    if forms.is_empty() {
        return Ok(Vec::new());
    }
    let prec = forms.iter().map(QSeries::prec).min().unwrap_or(1);
    let mut m: Vec<Vec<BigRational>> = forms.iter().map(|f| f.coeffs()[..prec].to_vec()).collect();
    let pivots = rref(&mut m);
    if pivots.len() != forms.len() {
        return Err(Error::BasisIncompleteOrDependent(format!("{} forms span only {} dimensions at precision {prec}", forms.len(), pivots.len())));
    }
    Ok(m.into_iter().map(QSeries::new).collect())
}

/// Bernoulli numbers B_0..=B_n (B_1 = -1/2), from Σ_{j<=m} C(m+1, j) B_j = 0.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::one()];
    for m in 1..=n {
        let mut binom = BigInt::one();
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += bj * BigRational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        // binom is now C(m+1, m)
        b.push(-acc / BigRational::from_integer(binom));
    }
    b
}

/// Normalized Eisenstein series E_k = 1 - (2k/B_k) Σ σ_{k-1}(n) q^n, even k >= 4.
pub fn eisenstein(k: u32, prec: usize) -> Result<QSeries> {
    if k < 4 || k % 2 == 1 {
        return Err(Error::invalid(format!("Eisenstein series needs even weight >= 4, got {k}")));
    }
    let prec = prec.max(1);
    let bk = bernoulli_numbers(k as usize).pop().expect("nonempty");
    let factor = -BigRational::from_integer(BigInt::from(2 * k)) / bk;
    let mut sigma = vec![BigInt::zero(); prec];
    for d in 1..prec {
        let dp = BigInt::from(d).pow(k - 1);
        for m in (d..prec).step_by(d) {
            sigma[m] += &dp;
        }
    }
    let mut coeffs: Vec<BigRational> = sigma.into_iter().map(|s| &factor * BigRational::from_integer(s)).collect();
    coeffs[0] = BigRational::one();
    QSeries::new(coeffs).with_meta(FormMeta { weight: k, level: 1, cusp: false })
}

/// Π_{n>=1} (1 - q^n) by the pentagonal number theorem, as integers.
pub(crate) fn euler_product_integers(prec: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); prec];
    for (n, sign) in pentagonal_terms(prec) {
        c[n] += sign;
    }
    c
}

/// Exponents and signs of Π(1 - q^n) = Σ (-1)^m q^{m(3m-1)/2} below `limit`.
pub(crate) fn pentagonal_terms(limit: usize) -> Vec<(usize, i64)> {
    let mut out = vec![];
    if limit == 0 {
        return out;
    }
    out.push((0, 1));
    for m in 1usize.. {
        let sign = if m % 2 == 1 { -1 } else { 1 };
        let a = m * (3 * m - 1) / 2;
        if a >= limit {
            break;
        }
        out.push((a, sign));
        let b = m * (3 * m + 1) / 2;
        if b < limit {
            out.push((b, sign));
        }
    }
    out
}

/// 1 / Π(1 - q^n) = Σ p(n) q^n, by Euler's pentagonal recurrence.
pub(crate) fn partition_numbers(prec: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); prec];
    if prec == 0 {
        return p;
    }
    p[0] = BigInt::one();
    let terms: Vec<(usize, i64)> = pentagonal_terms(prec).into_iter().skip(1).collect();
    for n in 1..prec {
        let mut acc = BigInt::zero();
        for &(a, sign) in &terms {
            if a > n {
                break;
            }
            // p(n) = -Σ_{a>0} sign(a) p(n-a)
            if sign < 0 {
                acc += &p[n - a];
            } else {
                acc -= &p[n - a];
            }
        }
        p[n] = acc;
    }
    p
}

/// η(τ)³ / q^{1/8} = Σ_{m>=0} (-1)^m (2m+1) q^{m(m+1)/2}.
pub(crate) fn eta_cubed_terms(limit: usize) -> Vec<(usize, i64)> {
    (0usize..).map(|m| (m * (m + 1) / 2, m)).take_while(|&(e, _)| e < limit).map(|(e, m)| (e, if m % 2 == 0 { 2 * m as i64 + 1 } else { -(2 * m as i64 + 1) })).collect()
}

/// Δ = q Π (1 - q^n)^24, computed as q·(η³)^8.
pub fn delta(prec: usize) -> Result<QSeries> {
    if prec < 2 {
        return Err(Error::invalid("Δ needs precision >= 2"));
    }
    let mut e3 = vec![BigInt::zero(); prec - 1];
    for (e, c) in eta_cubed_terms(prec - 1) {
        e3[e] = BigInt::from(c);
    }
    let e24 = QSeries::from_integers(e3).pow(8);
    let mut coeffs = vec![BigRational::zero()];
    coeffs.extend(e24.coeffs().iter().cloned());
    QSeries::new(coeffs).with_meta(FormMeta { weight: 12, level: 1, cusp: true })
}

/// Echelonized bases of M_k(SL₂(Z)) and S_k(SL₂(Z)) from the monomials E4^a E6^b.
pub fn level1_basis(k: u32, prec: usize) -> Result<FormSpace> {
    let character = CharacterTable::trivial(1);
    let empty = |full: Vec<QSeries>| FormSpace { weight: k, level: 1, character: character.clone(), full_basis: full, basis: Vec::new(), newforms: Vec::new() };
    if k % 2 == 1 || k == 2 {
        return Ok(empty(Vec::new()));
    }
    let exps: Vec<(u32, u32)> = (0..=k / 6).filter(|b| (k - 6 * b) % 4 == 0).map(|b| ((k - 6 * b) / 4, b)).collect();
    if prec < exps.len() {
        return Err(Error::PrecisionExceeded { requested: exps.len(), available: prec });
    }
    let e4 = eisenstein(4, prec)?;
    let e6 = eisenstein(6, prec)?;
    let monomials: Vec<QSeries> = exps.iter().map(|&(a, b)| e4.pow(a).mul(&e6.pow(b))).collect();
    let full = echelon(&monomials)?;
    let full: Vec<QSeries> = full.into_iter().map(|s| s.with_meta(FormMeta { weight: k, level: 1, cusp: false })).collect::<Result<_>>()?;
    let cusp: Vec<QSeries> = full
        .iter()
        .filter(|s| s.coeffs()[0].is_zero())
        .map(|s| s.clone().with_meta(FormMeta { weight: k, level: 1, cusp: true }))
        .collect::<Result<_>>()?;
    let mut space = empty(full);
    space.basis = cusp;
    Ok(space)
}

/// Dimension of S_k(SL₂(Z)).
pub fn level1_cusp_dim(k: u32) -> usize {
    if k % 2 == 1 || k < 12 {
        return 0;
    }
    let m = (k / 12) as usize;
    if k % 12 == 2 { m - 1 } else { m }
}

/// Validates an eta-quotient specification and returns its leading exponent Σ r·d / 24.
pub fn eta_leading_exponent(factors: &[(u64, i32)], level: u64, weight: u32) -> Result<usize> {
    if factors.is_empty() {
        return Err(Error::invalid("empty eta quotient"));
    }
    let mut order: i64 = 0;
    let mut total: i64 = 0;
    for &(d, r) in factors {
        if d == 0 || level % d != 0 {
            return Err(Error::invalid(format!("eta factor d = {d} does not divide the level {level}")));
        }
        order += d as i64 * r as i64;
        total += r as i64;
    }
    if order.rem_euclid(24) != 0 {
        return Err(Error::invalid(format!("leading exponent {order}/24 is not integral")));
    }
    if total != 2 * weight as i64 {
        return Err(Error::invalid(format!("exponents sum to {total}, expected 2k = {}", 2 * weight)));
    }
    if order < 0 {
        return Err(Error::invalid("eta quotient has a pole at infinity"));
    }
    Ok((order / 24) as usize)
}

/// q^{Σ r d / 24} Π_d Π_n (1 - q^{dn})^{r_d}, truncated to `prec`.
pub fn eta_quotient(factors: &[(u64, i32)], level: u64, weight: u32, prec: usize) -> Result<QSeries> {
    let shift = eta_leading_exponent(factors, level, weight)?;
    let prec = prec.max(1);
    let inner = prec.saturating_sub(shift).max(1);
    let mut acc = QSeries::one(inner);
    for &(d, r) in factors {
        let base_len = inner.div_ceil(d as usize).max(1);
        let base = if r >= 0 { euler_product_integers(base_len) } else { partition_numbers(base_len) };
        let series = QSeries::from_integers(base).substitute_power(d as usize, inner)?;
        acc = acc.mul(&series.pow(r.unsigned_abs()));
    }
    let mut coeffs = vec![BigRational::zero(); prec];
    for (i, c) in acc.coeffs().iter().enumerate() {
        if i + shift < prec {
            coeffs[i + shift] = c.clone();
        }
    }
    QSeries::new(coeffs).with_meta(FormMeta { weight, level, cusp: shift > 0 })
}

/// T_p (or U_p when χ(p) = 0): b(n) = a(pn) + χ(p) p^{k-1} a(n/p), at precision ⌊prec/p⌋.
pub fn hecke(f: &QSeries, p: u64, weight: u32, level: u64, character: &CharacterTable) -> Result<QSeries> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    if character.modulus() != level {
        return Err(Error::invalid("character modulus must equal the level"));
    }
    let out = f.prec() / p as usize;
    if out == 0 {
        return Err(Error::PrecisionExceeded { requested: p as usize, available: f.prec() });
    }
    let chi = character.rational_value(p).ok_or_else(|| Error::invalid("Hecke operators need a rational character value χ(p)"))?;
    let twist = chi * BigRational::from_integer(BigInt::from(p).pow(weight.saturating_sub(1)));
    let pu = p as usize;
    let coeffs = (0..out)
        .map(|n| {
            let mut b = f.coeffs()[pu * n].clone();
            if n % pu == 0 && !twist.is_zero() {
                b += &twist * &f.coeffs()[n / pu];
            }
            b
        })
        .collect();
    let s = QSeries::new(coeffs);
    Ok(match f.meta() {
        Some(m) => s.with_meta(m)?,
        None => s,
    })
}

/// f(δτ): b(n) = a(n/δ) when δ | n, else 0.
pub fn degenerate_lift(f: &QSeries, delta: usize, prec: usize) -> Result<QSeries> {
    let lifted = f.substitute_power(delta, prec)?;
    Ok(match f.meta() {
        Some(m) => lifted.with_meta(FormMeta { weight: m.weight, level: m.level * delta as u64, cusp: m.cusp })?,
        None => lifted,
    })
}

/// Coefficients a(0..=n_max) of a record lifted by δ (complex, unnormalized).
pub fn degenerate_lift_record(rec: &NewformRecord, delta: usize, n_max: usize) -> Result<Vec<num_complex::Complex64>> {
    if delta == 0 {
        return Err(Error::invalid("lift divisor must be positive"));
    }
    if n_max / delta > rec.prec() {
        return Err(Error::PrecisionExceeded { requested: n_max / delta, available: rec.prec() });
    }
    Ok((0..=n_max)
        .map(|n| if n > 0 && n % delta == 0 { rec.coefficient(n / delta).expect("checked") } else { num_complex::Complex64::new(0.0, 0.0) })
        .collect())
}
