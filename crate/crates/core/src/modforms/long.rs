//! Long expansions (up to ~10^6 coefficients) through the multi-modular engine.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::eigen::{eigenforms, form_label, DEFAULT_PROBES};
use super::record::{normalization_factor, normalize_exact, NewformRecord, RecordSource};
use super::{delta, eisenstein, eta_cubed_terms, eta_leading_exponent, eta_quotient, level1_basis, level1_cusp_dim, pentagonal_terms, CharacterTable, FormSpace};
use crate::linalg::solve;
use crate::modseries::{mul_trunc, pow_mod, pow_trunc, reduce_i64, GrowthBound, NttPrime, Residues};
use crate::par::Parallelism;
use crate::{Error, Result};

/// Up to this many coefficients the exact rational pipeline is used directly.
const SHORT_LIMIT: usize = 2048;
/// Exact integer coefficients kept alongside long floating expansions.
const EXACT_PREFIX: usize = 2048;

/// A built-in eta-quotient newform with trivial character.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuiltinEta {
    pub label: &'static str,
    pub level: u64,
    pub weight: u32,
    pub factors: &'static [(u64, i32)],
}

pub const BUILTIN_ETA: [BuiltinEta; 7] = [
    BuiltinEta { label: "11.2.a", level: 11, weight: 2, factors: &[(1, 2), (11, 2)] },
    BuiltinEta { label: "14.2.a", level: 14, weight: 2, factors: &[(1, 1), (2, 1), (7, 1), (14, 1)] },
    BuiltinEta { label: "15.2.a", level: 15, weight: 2, factors: &[(1, 1), (3, 1), (5, 1), (15, 1)] },
    BuiltinEta { label: "2.8.a", level: 2, weight: 8, factors: &[(1, 8), (2, 8)] },
    BuiltinEta { label: "3.6.a", level: 3, weight: 6, factors: &[(1, 6), (3, 6)] },
    BuiltinEta { label: "5.4.a", level: 5, weight: 4, factors: &[(1, 4), (5, 4)] },
    BuiltinEta { label: "6.4.a", level: 6, weight: 4, factors: &[(1, 2), (2, 2), (3, 2), (6, 2)] },
];

/// Labels accepted by [`builtin_newform`] for level 1 up to weight 36, plus the eta newforms.
pub fn builtin_labels() -> Vec<String> {
    let mut out: Vec<String> = (12..=36).step_by(2).flat_map(|k| (0..level1_cusp_dim(k)).map(move |i| form_label(1, k, i))).collect();
    out.extend(BUILTIN_ETA.iter().map(|b| b.label.to_string()));
    out
}

/// A built-in newform by label, with λ(n) known for n <= n_max.
pub fn builtin_newform(label: &str, n_max: usize, par: Parallelism) -> Result<NewformRecord> {
    if let Some(b) = BUILTIN_ETA.iter().find(|b| b.label == label) {
        return eta_newform_long(b, n_max, par);
    }
    let parts: Vec<&str> = label.split('.').collect();
    if parts.len() == 3 && parts[0] == "1" {
        if let Ok(k) = parts[1].parse::<u32>() {
            let forms = level1_newforms(k, n_max, par)?;
            if let Some(f) = forms.into_iter().find(|f| f.label == label) {
                return Ok(f);
            }
        }
    }
    Err(Error::invalid(format!("unknown built-in newform {label:?}")))
}

/// Built-in newforms of weight k and level dividing N.
pub fn builtin_newforms_for(weight: u32, level: u64, n_max: usize, par: Parallelism) -> Result<Vec<NewformRecord>> {
    let mut out = level1_newforms(weight, n_max, par)?;
    for b in BUILTIN_ETA.iter().filter(|b| b.weight == weight && level % b.level == 0) {
        out.push(eta_newform_long(b, n_max, par)?);
    }
    Ok(out)
}

/// Residues of Π(1 - q^{dn})^r (r >= 0) modulo one prime.
fn eta_factor_residues(d: usize, r: u32, len: usize, prime: NttPrime) -> Result<Vec<u32>> {
    let mut base = vec![0u32; len.div_ceil(d)];
    for (e, s) in pentagonal_terms(base.len()) {
        base[e] = reduce_i64(s, prime.p);
    }
    let powered = pow_trunc(&base, r, base.len(), prime)?;
    let mut out = vec![0u32; len];
    for (i, v) in powered.into_iter().enumerate() {
        if i * d < len {
            out[i * d] = v;
        }
    }
    Ok(out)
}

fn shifted(v: Vec<u32>, shift: usize, len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for (i, x) in v.into_iter().enumerate() {
        if i + shift < len {
            out[i + shift] = x;
        }
    }
    out
}

/// An eta-quotient newform to n_max coefficients. Uses Deligne's bound |a(n)| <= 2 n^{k/2}
/// to size the residue system; the spare prime verifies the reconstruction.
pub fn eta_newform_long(eta: &BuiltinEta, n_max: usize, par: Parallelism) -> Result<NewformRecord> {
    let character = CharacterTable::trivial(eta.level);
    let len = n_max + 1;
    if len <= SHORT_LIMIT {
        let s = eta_quotient(eta.factors, eta.level, eta.weight, len.max(2))?;
        let ints = s.integer_coeffs().ok_or_else(|| Error::InternalInconsistency("eta quotient with fractional coefficients".into()))?;
        return NewformRecord::from_integral(eta.level, eta.weight, character, ints, RecordSource::Computed, eta.label);
    }
    if eta.factors.iter().any(|&(_, r)| r < 0) {
        return Err(Error::invalid("long eta expansions support nonnegative exponents only"));
    }
    let shift = eta_leading_exponent(eta.factors, eta.level, eta.weight)?;
    let bits = GrowthBound::new(2.0, eta.weight as f64 / 2.0).bits(len);
    let inner = len - shift.min(len);
    let res = Residues::compute(bits, len, par, |prime| {
        let mut acc: Option<Vec<u32>> = None;
        for &(d, r) in eta.factors {
            let f = eta_factor_residues(d as usize, r as u32, inner, prime)?;
            acc = Some(match acc {
                None => f,
                Some(a) => mul_trunc(&a, &f, inner, prime)?,
            });
        }
        Ok(shifted(acc.expect("nonempty eta quotient"), shift, len))
    })?;
    let values = res.to_f64(par);
    let exact = res.to_bigint(EXACT_PREFIX.min(len));
    record_from_values(eta.level, eta.weight, character, &values, exact, eta.label.to_string())
}

fn record_from_values(level: u64, weight: u32, character: CharacterTable, values: &[f64], exact: Vec<BigInt>, label: String) -> Result<NewformRecord> {
    let mut lambda = Vec::with_capacity(values.len());
    lambda.push(Complex64::new(0.0, 0.0));
    for n in 1..values.len() {
        let l = match exact.get(n) {
            Some(a) => normalize_exact(&BigRational::from_integer(a.clone()), n as u64, weight),
            None => values[n] / normalization_factor(n as u64, weight),
        };
        lambda.push(Complex64::new(l, 0.0));
    }
    let mut rec = NewformRecord::new(level, weight, character, lambda, RecordSource::Computed, label)?;
    if !exact.is_empty() {
        rec.set_exact(exact);
    }
    Ok(rec)
}

/// Exponents (a, b) of E4^a E6^b of weight w with b minimal.
fn eisenstein_exponents(w: u32) -> (u32, u32) {
    if w % 4 == 0 { (w / 4, 0) } else { ((w - 6) / 4, 1) }
}

/// Residues of E_k (k = 4 or 6) modulo one prime.
fn eisenstein_residues(k: u32, len: usize, prime: NttPrime) -> Vec<u32> {
    let p = prime.p as u64;
    let c = if k == 4 { 240 } else { p - 504 };
    let mut sigma = vec![0u64; len];
    for d in 1..len {
        let dp = pow_mod(d as u64 % p, (k - 1) as u64, p);
        for m in (d..len).step_by(d) {
            let v = sigma[m] + dp;
            sigma[m] = if v >= p { v - p } else { v };
        }
    }
    let mut out: Vec<u32> = sigma.into_iter().map(|s| (s * c % p) as u32).collect();
    if len > 0 {
        out[0] = 1;
    }
    out
}

fn delta_residues(len: usize, prime: NttPrime) -> Result<Vec<u32>> {
    let inner = len - 1;
    let mut e3 = vec![0u32; inner];
    for (e, c) in eta_cubed_terms(inner) {
        e3[e] = reduce_i64(c, prime.p);
    }
    let e24 = pow_trunc(&e3, 8, inner, prime)?;
    Ok(shifted(e24, 1, len))
}

/// Δ^j E4^a E6^b modulo one prime, for each requested exponent triple.
fn monomial_residues(exps: &[(u32, u32, u32)], len: usize, prime: NttPrime) -> Result<Vec<Vec<u32>>> {
    let delta = delta_residues(len, prime)?;
    let e4 = eisenstein_residues(4, len, prime);
    let e6 = eisenstein_residues(6, len, prime);
    let mut delta_pows: Vec<Vec<u32>> = vec![delta];
    let mut e4_pows: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut e6_pows: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut out = Vec::with_capacity(exps.len());
    for &(j, a, b) in exps {
        while delta_pows.len() < j as usize {
            let next = mul_trunc(delta_pows.last().expect("nonempty"), &delta_pows[0], len, prime)?;
            delta_pows.push(next);
        }
        let mut acc = delta_pows[j as usize - 1].clone();
        if a > 0 {
            if !e4_pows.contains_key(&a) {
                e4_pows.insert(a, pow_trunc(&e4, a, len, prime)?);
            }
            acc = mul_trunc(&acc, &e4_pows[&a], len, prime)?;
        }
        if b > 0 {
            if !e6_pows.contains_key(&b) {
                e6_pows.insert(b, pow_trunc(&e6, b, len, prime)?);
            }
            acc = mul_trunc(&acc, &e6_pows[&b], len, prime)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Coordinates w with f(n) = Σ_{j<=n} w_j m_j(n) for n = 1..=d (m_j = q^j + ...).
fn monomial_coordinates(f: &[BigRational], monomials: &[Vec<BigRational>]) -> Vec<BigRational> {
    let mut w: Vec<BigRational> = Vec::with_capacity(monomials.len());
    for n in 1..=monomials.len() {
        let mut v = f[n].clone();
        for (jj, wj) in w.iter().enumerate() {
            v -= wj * &monomials[jj][n];
        }
        w.push(v);
    }
    w
}

/// Bits for the cusp monomials m_j = Σ_i (W^{-1})_{ji} f_i, where each eigenform obeys
/// |a_i(n)| <= d(n) n^{(k-1)/2} <= 2 n^{k/2}.
fn monomial_bits(weights: &[Vec<BigRational>], k: u32, len: usize) -> Result<u32> {
    let d = weights.len();
    let mut worst = 0.0f64;
    for i in 0..d {
        let mut unit = vec![BigRational::zero(); d];
        unit[i] = BigRational::from_integer(BigInt::from(1));
        let col = solve(weights, &unit).ok_or_else(|| Error::InternalInconsistency("eigenforms are linearly dependent".into()))?;
        for c in &col {
            worst = worst.max(c.to_f64().unwrap_or(f64::INFINITY).abs());
        }
    }
    let scale = 2.0 * 1.01 * worst * d as f64;
    Ok(GrowthBound::new(scale.max(2.0), k as f64 / 2.0).bits(len))
}

/// The normalized Hecke eigenforms of S_k(SL₂(Z)) with λ(n) for n <= n_max.
pub fn level1_newforms(k: u32, n_max: usize, par: Parallelism) -> Result<Vec<NewformRecord>> {
    let d = level1_cusp_dim(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    let short = 8 * (d + 2);
    let len = n_max + 1;
    if len <= SHORT_LIMIT {
        let space = level1_basis(k, short.max(len))?;
        return eigenforms(&space, &DEFAULT_PROBES)?
            .iter()
            .enumerate()
            .map(|(i, f)| Ok(f.to_record(&space, form_label(1, k, i))?.truncated(n_max)))
            .collect();
    }
    let space: FormSpace = level1_basis(k, short)?;
    let forms = eigenforms(&space, &DEFAULT_PROBES)?;
    // cusp monomials m_j = Δ^j E_{k-12j}, with m_j = q^j + O(q^{j+1})
    let exps: Vec<(u32, u32, u32)> = (1..=d as u32).map(|j| (j, eisenstein_exponents(k - 12 * j))).map(|(j, (a, b))| (j, a, b)).collect();
    let (e4, e6, dl) = (eisenstein(4, d + 1)?, eisenstein(6, d + 1)?, delta(d + 1)?);
    let short_monomials: Vec<Vec<BigRational>> = exps.iter().map(|&(j, a, b)| dl.pow(j).mul(&e4.pow(a)).mul(&e6.pow(b)).coeffs().to_vec()).collect();
    let weights: Vec<Vec<BigRational>> = forms.iter().map(|form| monomial_coordinates(&form.expansion.coeffs()[..=d], &short_monomials)).collect();
    let bits = monomial_bits(&weights, k, len)?;
    let residues = Residues::compute_many(bits, len, exps.len(), par, |prime| monomial_residues(&exps, len, prime))?;
    let floats: Vec<Vec<f64>> = residues.iter().map(|r| r.to_f64(par)).collect();
    let mut out = Vec::with_capacity(forms.len());
    for (i, form) in forms.iter().enumerate() {
        let w = &weights[i];
        let wf: Vec<f64> = w.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        let values: Vec<f64> = (0..len).map(|n| wf.iter().zip(&floats).map(|(c, m)| c * m[n]).sum()).collect();
        let exact = if form.is_exact() {
            let prefix = EXACT_PREFIX.min(len);
            let ints: Vec<Vec<BigInt>> = residues.iter().map(|r| r.to_bigint(prefix)).collect();
            let combined: Option<Vec<BigInt>> = (0..prefix)
                .map(|n| {
                    let s = w.iter().zip(&ints).fold(BigRational::zero(), |acc, (c, m)| acc + c * BigRational::from_integer(m[n].clone()));
                    s.is_integer().then(|| s.to_integer())
                })
                .collect();
            combined.unwrap_or_default()
        } else {
            Vec::new()
        };
        out.push(record_from_values(1, k, CharacterTable::trivial(1), &values, exact, form_label(1, k, i))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::eigenbasis;

    #[test]
    fn long_delta_matches_exact() {
        let recs = level1_newforms(12, 3000, Parallelism::Sequential).unwrap();
        assert_eq!(recs.len(), 1);
        let exact = delta(3001).unwrap().integer_coeffs().unwrap();
        let r = &recs[0];
        assert_eq!(r.prec(), 3000);
        assert_eq!(r.exact().unwrap(), &exact[..EXACT_PREFIX]);
        for n in [1, 2, 100, 2047, 2048, 2999, 3000] {
            let want = normalize_exact(&BigRational::from_integer(exact[n].clone()), n as u64, 12);
            assert!((r.lambda(n).unwrap().re - want).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn long_weight_24_matches_short() {
        let long = level1_newforms(24, 2500, Parallelism::Parallel).unwrap();
        let space = level1_basis(24, 400).unwrap();
        let short = eigenbasis(&space, &DEFAULT_PROBES).unwrap();
        for (l, s) in long.iter().zip(&short) {
            for n in 1..400 {
                let (a, b) = (l.lambda(n).unwrap().re, s.lambda(n).unwrap().re);
                assert!((a - b).abs() < 1e-9, "n = {n}: {a} vs {b}");
            }
            assert!(l.exact().is_none());
        }
    }

    #[test]
    fn long_eta_matches_exact() {
        let b = BUILTIN_ETA[0];
        let long = eta_newform_long(&b, 2600, Parallelism::Sequential).unwrap();
        let exact = eta_quotient(b.factors, b.level, b.weight, 2601).unwrap().integer_coeffs().unwrap();
        for n in [1usize, 2, 11, 2100, 2600] {
            let want = normalize_exact(&BigRational::from_integer(exact[n].clone()), n as u64, 2);
            assert!((long.lambda(n).unwrap().re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn builtin_lookup() {
        assert!(builtin_labels().contains(&"1.24.b".to_string()));
        let r = builtin_newform("1.24.b", 50, Parallelism::Sequential).unwrap();
        assert_eq!(r.weight, 24);
        let e = builtin_newform("5.4.a", 50, Parallelism::Sequential).unwrap();
        assert_eq!(e.level, 5);
        assert!(builtin_newform("nope", 10, Parallelism::Sequential).is_err());
        let for2 = builtin_newforms_for(8, 2, 20, Parallelism::Sequential).unwrap();
        assert_eq!(for2.len(), 1);
        assert_eq!(builtin_newforms_for(12, 2, 20, Parallelism::Sequential).unwrap().len(), 1);
    }
}
