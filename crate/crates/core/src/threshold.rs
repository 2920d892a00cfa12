//! Decomposition into newforms and lifts, d₀, the minimal square-free
//! nonvanishing index, bound evaluation, asymptotic fits and threshold scans.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::arith::{gcd, is_squarefree, squarefree_divisors};
use crate::linalg::{solve_overdetermined, OverdeterminedFailure};
use crate::modforms::{builtin_newform, builtin_newforms_for, eta_quotient, level1_newforms, normalization_factor, NewformRecord};
use crate::par::{map_collect, Parallelism};
use crate::qseries::{rational_to_f64, QSeries};
use crate::rslfun::direct_weighted_sum;
use crate::weights::SmoothWeight;
use crate::{Error, Result};

pub const DEFAULT_EPS: f64 = 0.01;
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-8;
pub const FLOAT_ZERO_THRESHOLD: f64 = 1e-9;
pub const DIAGONAL_ERROR_EXPONENT: f64 = 0.75;
pub const ENVELOPE_EXPONENT: f64 = 0.8;

/// Fourier coefficients a(0..prec), exact when every ingredient was exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    Exact(QSeries),
    Float(Vec<Complex64>),
}

impl From<QSeries> for Coefficients {
    fn from(s: QSeries) -> Self {
        Coefficients::Exact(s)
    }
}

impl Coefficients {
    /// Number of known coefficients, a(0) included.
    pub fn prec(&self) -> usize {
        match self {
            Coefficients::Exact(s) => s.prec(),
            Coefficients::Float(v) => v.len(),
        }
    }

    pub fn value(&self, n: usize) -> Complex64 {
        match self {
            Coefficients::Exact(s) => Complex64::new(rational_to_f64(&s.coeffs()[n]), 0.0),
            Coefficients::Float(v) => v[n],
        }
    }

    pub fn exact(&self) -> Option<&QSeries> {
        match self {
            Coefficients::Exact(s) => Some(s),
            Coefficients::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact().is_some()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.prec()).map(|n| self.value(n)).collect()
    }
}

fn ser_rational<S: Serializer>(v: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_some(&r.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionEntry {
    /// Index into the basis passed to `decompose`.
    pub newform: usize,
    pub label: String,
    pub delta: u64,
    pub alpha: Complex64,
    #[serde(serialize_with = "ser_rational")]
    pub alpha_exact: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub weight: u32,
    pub level: u64,
    pub character_conductor: u64,
    /// Nonzero coefficients α_{i,δ}.
    pub entries: Vec<DecompositionEntry>,
    pub d0: u64,
    /// Relative residual of the solve; 0 on the exact path.
    pub residual: f64,
    pub exact: bool,
    pub unknowns: usize,
}

impl Decomposition {
    /// Smallest δ among the entries, or `None` if there are none.
    pub fn min_delta(entries: &[DecompositionEntry]) -> Option<u64> {
        entries.iter().map(|e| e.delta).min()
    }

    /// The entries with the given δ removed.
    pub fn without_delta(&self, delta: u64) -> Vec<DecompositionEntry> {
        self.entries.iter().filter(|e| e.delta != delta).cloned().collect()
    }
}

fn lift_columns(basis: &[NewformRecord], level: u64, m_chi: u64) -> Result<Vec<(usize, u64)>> {
    let deltas = squarefree_divisors(level)?;
    let mut cols = Vec::new();
    for (i, b) in basis.iter().enumerate() {
        for &d in &deltas {
            if level % (d * m_chi) == 0 && level % (b.level * d) == 0 {
                cols.push((i, d));
            }
        }
    }
    Ok(cols)
}

/// Writes f = Σ α_{i,δ} f_i(δτ) by matching a(1..=prec) against the lifted basis.
pub fn decompose(f: &Coefficients, basis: &[NewformRecord], level: u64, m_chi: u64, prec: usize) -> Result<Decomposition> {
    if m_chi == 0 || level % m_chi != 0 || !is_squarefree(level / m_chi)? {
        return Err(Error::invalid(format!("N/m_χ = {level}/{m_chi} must be a square-free integer")));
    }
    let weight = basis.first().ok_or_else(|| Error::BasisIncompleteOrDependent("empty newform basis".into()))?.weight;
    if basis.iter().any(|b| b.weight != weight) {
        return Err(Error::invalid("basis mixes weights"));
    }
    let cols = lift_columns(basis, level, m_chi)?;
    let u = cols.len();
    if u == 0 {
        return Err(Error::BasisIncompleteOrDependent(format!("no newform of level dividing {level} in the basis")));
    }
    if prec < 4 * u {
        return Err(Error::PrecisionExceeded { requested: 4 * u, available: prec });
    }
    if f.prec() <= prec {
        return Err(Error::PrecisionExceeded { requested: prec, available: f.prec().saturating_sub(1) });
    }
    if let Some(b) = basis.iter().find(|b| b.prec() < prec) {
        return Err(Error::PrecisionExceeded { requested: prec, available: b.prec() });
    }
    if (1..=prec).all(|n| f.value(n).norm() == 0.0) && f.exact().is_none_or(|s| s.coeffs()[1..=prec].iter().all(Zero::is_zero)) {
        return Err(Error::invalid("the zero form has no decomposition"));
    }
    let exact_inputs = f.exact().filter(|_| basis.iter().all(|b| b.exact().is_some_and(|e| e.len() > prec)));
    let (alphas, exact_alphas, residual) = match exact_inputs {
        Some(series) => {
            let a: Vec<Vec<BigRational>> = (1..=prec)
                .map(|n| {
                    cols.iter()
                        .map(|&(i, d)| {
                            let n = n as u64;
                            if n % d == 0 { BigRational::from_integer(basis[i].exact().unwrap()[(n / d) as usize].clone()) } else { BigRational::zero() }
                        })
                        .collect()
                })
                .collect();
            let sol = solve_overdetermined(&a, &series.coeffs()[1..=prec]).map_err(|e| match e {
                OverdeterminedFailure::RankDeficient(r) => Error::BasisIncompleteOrDependent(format!("lifted basis has rank {r} < {u}")),
                OverdeterminedFailure::Inconsistent => Error::DecompositionFailure("the form is not in the span of the lifted basis".into()),
            })?;
            let floats = sol.iter().map(|r| Complex64::new(rational_to_f64(r), 0.0)).collect();
            (floats, Some(sol), 0.0)
        }
        None => {
            let (alphas, residual) = float_solve(f, basis, &cols, weight, prec)?;
            (alphas, None, residual)
        }
    };
    let scale = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let entries: Vec<DecompositionEntry> = cols
        .iter()
        .enumerate()
        .filter(|&(j, _)| match &exact_alphas {
            Some(e) => !e[j].is_zero(),
            None => alphas[j].norm() > FLOAT_ZERO_THRESHOLD * scale,
        })
        .map(|(j, &(i, d))| DecompositionEntry {
            newform: i,
            label: basis[i].label.clone(),
            delta: d,
            alpha: alphas[j],
            alpha_exact: exact_alphas.as_ref().map(|e| e[j].clone()),
        })
        .collect();
    let d0 = Decomposition::min_delta(&entries).ok_or_else(|| Error::DecompositionFailure("every coefficient vanished".into()))?;
    Ok(Decomposition { weight, level, character_conductor: m_chi, entries, d0, residual, exact: exact_alphas.is_some(), unknowns: u })
}

fn float_solve(f: &Coefficients, basis: &[NewformRecord], cols: &[(usize, u64)], weight: u32, prec: usize) -> Result<(Vec<Complex64>, f64)> {
    let u = cols.len();
    // rows divided by n^((k-1)/2) so every row has unit scale
    let a = DMatrix::from_fn(prec, u, |r, j| {
        let n = (r + 1) as u64;
        let (i, d) = cols[j];
        if n % d == 0 { basis[i].coefficient((n / d) as usize).expect("checked") / normalization_factor(n, weight) } else { Complex64::new(0.0, 0.0) }
    });
    let b = DVector::from_fn(prec, |r, _| f.value(r + 1) / normalization_factor((r + 1) as u64, weight));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
    if rank < u {
        return Err(Error::BasisIncompleteOrDependent(format!("lifted basis has numerical rank {rank} < {u}")));
    }
    let x = svd.solve(&b, 1e-10 * smax).map_err(|e| Error::InternalInconsistency(e.to_string()))?;
    let residual = (&a * &x - &b).norm() / b.norm();
    if residual > DECOMPOSITION_TOLERANCE {
        return Err(Error::DecompositionFailure(format!("relative residual {residual:e} exceeds {DECOMPOSITION_TOLERANCE:e}")));
    }
    Ok((x.iter().copied().collect(), residual))
}

/// Σ α_{i,δ} a_i(n/δ) for n = 0..=prec.
pub fn reconstruct(entries: &[DecompositionEntry], basis: &[NewformRecord], prec: usize) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::new(0.0, 0.0); prec + 1];
    for e in entries {
        let rec = basis.get(e.newform).ok_or_else(|| Error::invalid("entry refers to a missing newform"))?;
        for (n, slot) in out.iter_mut().enumerate().skip(1) {
            if n as u64 % e.delta == 0 {
                *slot += e.alpha * rec.coefficient(n / e.delta as usize)?;
            }
        }
    }
    Ok(out)
}

/// a_f(d₀n) for n <= n_max coprime to N, checked against Σ_i α_{i,d₀} a_i(n).
pub fn project_d0_coefficients(f: &Coefficients, dec: &Decomposition, basis: &[NewformRecord], n_max: usize) -> Result<Vec<(u64, Complex64)>> {
    let d0 = dec.d0 as usize;
    if d0 * n_max >= f.prec() {
        return Err(Error::PrecisionExceeded { requested: d0 * n_max, available: f.prec().saturating_sub(1) });
    }
    let at_d0: Vec<&DecompositionEntry> = dec.entries.iter().filter(|e| e.delta == dec.d0).collect();
    let exact = f.exact().filter(|_| at_d0.iter().all(|e| e.alpha_exact.is_some() && basis[e.newform].exact().is_some_and(|x| x.len() > n_max)));
    let mut out = Vec::new();
    for n in (1..=n_max).filter(|&n| gcd(n as u64, dec.level) == 1) {
        let lhs = f.value(d0 * n);
        if let Some(series) = exact {
            let rhs = at_d0.iter().fold(BigRational::zero(), |acc, e| {
                acc + e.alpha_exact.as_ref().unwrap() * BigRational::from_integer(basis[e.newform].exact().unwrap()[n].clone())
            });
            if rhs != series.coeffs()[d0 * n] {
                return Err(Error::InternalInconsistency(format!("a_f({}) = {} but the d₀ projection gives {rhs}", d0 * n, series.coeffs()[d0 * n])));
            }
        } else {
            let rhs: Complex64 = at_d0.iter().map(|e| Ok(e.alpha * basis[e.newform].coefficient(n)?)).sum::<Result<Complex64>>()?;
            let scale = 1f64.max(lhs.norm()).max(rhs.norm());
            if (lhs - rhs).norm() > 1e-9 * scale {
                return Err(Error::InternalInconsistency(format!("a_f({}) = {lhs} but the d₀ projection gives {rhs}", d0 * n)));
            }
        }
        out.push((n as u64, lhs));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTest {
    /// Exact comparison with 0.
    Exact,
    /// |a(n)| <= 1e-9 · max_{m<=n} |a(m)| counts as 0.
    Relative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinSquarefree {
    pub n: Option<u64>,
    pub regime: ZeroTest,
}

/// Smallest square-free n <= search_limit with a(f, n) ≠ 0.
pub fn min_squarefree_nonzero(f: &Coefficients, search_limit: usize) -> Result<MinSquarefree> {
    if search_limit >= f.prec() {
        return Err(Error::PrecisionExceeded { requested: search_limit, available: f.prec().saturating_sub(1) });
    }
    let squarefree = |n: usize| is_squarefree(n as u64).expect("n >= 1");
    let n = match f {
        Coefficients::Exact(s) => (1..=search_limit).find(|&n| squarefree(n) && !s.coeffs()[n].is_zero()),
        Coefficients::Float(v) => {
            let mut running = 0.0f64;
            (1..=search_limit).find(|&n| {
                running = running.max(v[n].norm());
                squarefree(n) && v[n].norm() > FLOAT_ZERO_THRESHOLD * running
            })
        }
    };
    let regime = if f.is_exact() { ZeroTest::Exact } else { ZeroTest::Relative };
    Ok(MinSquarefree { n: n.map(|n| n as u64), regime })
}

/// k^{3+ε} N^{7/2+ε}, implied constant 1.
pub fn theorem_bound(k: u32, level: u64, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("ε must be nonnegative"));
    }
    Ok((k as f64).powf(3.0 + eps) * (level as f64).powf(3.5 + eps))
}

/// ln(a₀ · N · 2^{r(r−1)/2} · e^{4r·ln²(7k²N)}) with r = (k − 1)N.
pub fn legacy_bound_log(k: u32, level: u64, a0: f64) -> Result<f64> {
    if !(a0 > 0.0) {
        return Err(Error::invalid("a₀ must be positive"));
    }
    let r = (k.saturating_sub(1) as f64) * level as f64;
    let l = (7.0 * (k as f64).powi(2) * level as f64).ln();
    Ok(a0.ln() + (level as f64).ln() + r * (r - 1.0) / 2.0 * std::f64::consts::LN_2 + 4.0 * r * l * l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub diagonal: bool,
    pub samples: Vec<(f64, Complex64)>,
    /// Ĉ (diagonal only).
    pub slope: Option<f64>,
    /// K̂.
    pub amplitude: f64,
    /// ĉ: pinned for diagonal fits, fitted otherwise.
    pub exponent: f64,
    /// Root-mean-square residual of the model.
    pub residual: f64,
    /// Residual of the fit without the main term (diagonal only).
    pub residual_without_main_term: Option<f64>,
    /// K with |S(x) − Ĉx| <= K·x^0.8 on the first half of the grid (diagonal only).
    pub envelope_amplitude: Option<f64>,
    /// Whether that envelope also holds on the second half.
    pub envelope_holds: Option<bool>,
}

fn check_grid(xs: &[f64]) -> Result<()> {
    if xs.len() < 6 {
        return Err(Error::invalid(format!("fit grid has {} points; at least 6 are needed", xs.len())));
    }
    if xs.iter().any(|&x| !(x >= 2.0)) || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("fit grid must be increasing with x >= 2"));
    }
    if xs[xs.len() - 1] / xs[0] < 100.0 {
        return Err(Error::invalid("fit grid must span at least two decades"));
    }
    Ok(())
}

fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let a = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let x = a.clone().svd(true, true).solve(&b, 1e-14).expect("SVD with both factors");
    let rms = ((&a * &x - &b).norm_squared() / y.len() as f64).sqrt();
    (x.iter().copied().collect(), rms)
}

/// S(x) ≈ Ĉx + K̂x^c with c pinned; also the residual of S ≈ K x^c alone.
pub fn fit_diagonal(samples: &[(f64, f64)], c: f64) -> Result<AsymptoticFit> {
    check_grid(&samples.iter().map(|s| s.0).collect::<Vec<_>>())?;
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let rows: Vec<Vec<f64>> = samples.iter().map(|&(x, _)| vec![x, x.powf(c)]).collect();
    let (sol, residual) = least_squares(&rows, &y);
    let rows0: Vec<Vec<f64>> = samples.iter().map(|&(x, _)| vec![x.powf(c)]).collect();
    let (_, residual0) = least_squares(&rows0, &y);
    let ratios: Vec<f64> = samples.iter().map(|&(x, s)| (s - sol[0] * x).abs() / x.powf(ENVELOPE_EXPONENT)).collect();
    let envelope = ratios[..ratios.len() / 2].iter().copied().fold(0.0, f64::max);
    Ok(AsymptoticFit {
        diagonal: true,
        samples: samples.iter().map(|&(x, s)| (x, Complex64::new(s, 0.0))).collect(),
        slope: Some(sol[0]),
        amplitude: sol[1],
        exponent: c,
        residual,
        residual_without_main_term: Some(residual0),
        envelope_amplitude: Some(envelope),
        envelope_holds: Some(ratios.iter().all(|&r| r <= envelope)),
    })
}

/// |S(x)| ≈ K̂x^ĉ by least squares in log-log coordinates; vanishing samples are skipped.
pub fn fit_power_law(samples: &[(f64, Complex64)]) -> Result<AsymptoticFit> {
    check_grid(&samples.iter().map(|s| s.0).collect::<Vec<_>>())?;
    let used: Vec<(f64, f64)> = samples.iter().filter(|s| s.1.norm() > 0.0).map(|&(x, s)| (x.ln(), s.norm().ln())).collect();
    if used.len() < 3 {
        return Err(Error::EstimationFailure("too few nonzero sums for a power-law fit".into()));
    }
    let rows: Vec<Vec<f64>> = used.iter().map(|&(lx, _)| vec![1.0, lx]).collect();
    let (sol, residual) = least_squares(&rows, &used.iter().map(|u| u.1).collect::<Vec<_>>());
    Ok(AsymptoticFit { diagonal: false, samples: samples.to_vec(), slope: None, amplitude: sol[0].exp(), exponent: sol[1], residual, residual_without_main_term: None, envelope_amplitude: None, envelope_holds: None })
}

/// Direct sums of (f, g) on the grid, then the diagonal or power-law model.
pub fn asymptotic_fit(f: &NewformRecord, g: &NewformRecord, w: &SmoothWeight, level: u64, x_grid: &[f64], par: Parallelism) -> Result<AsymptoticFit> {
    check_grid(x_grid)?;
    let samples: Vec<(f64, Complex64)> = x_grid.iter().map(|&x| Ok((x, direct_weighted_sum(f, g, w, x, level, par)?.value))).collect::<Result<_>>()?;
    if f == g {
        let mut fit = fit_diagonal(&samples.iter().map(|&(x, s)| (x, s.re)).collect::<Vec<_>>(), DIAGONAL_ERROR_EXPONENT)?;
        if !(fit.slope.unwrap_or(0.0) > 0.0) {
            return Err(Error::EstimationFailure(format!("diagonal slope {:?} is not positive", fit.slope)));
        }
        fit.samples = samples;
        Ok(fit)
    } else {
        fit_power_law(&samples)
    }
}

/// Geometric grid of `points` values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let steps = points.max(2) - 1;
    (0..=steps).map(|i| if i == steps { hi } else { lo * (hi / lo).powf(i as f64 / steps as f64) }).collect()
}

/// A linear combination of lifted forms, e.g. `3*delta - 5*delta@2`, `eigen2`,
/// `eta(1^2,11^2)`, `11.2.a@3`, `1/2*data1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormSpec {
    pub terms: Vec<SpecTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecTerm {
    pub coefficient: BigRational,
    pub atom: Atom,
    pub delta: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    Delta,
    /// The i-th (1-based) eigenform of S_k(1).
    Eigen(usize),
    /// A built-in newform label.
    Label(String),
    EtaQuotient(Vec<(u64, i32)>),
    /// The i-th (1-based) record supplied by the caller.
    Data(usize),
}

impl std::str::FromStr for FormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormSpec::parse(s)
    }
}

impl FormSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |msg: String| Error::invalid(format!("form spec {s:?}: {msg}"));
        if text.is_empty() {
            return Err(bad("empty".into()));
        }
        // split at top-level + and -
        let mut pieces = Vec::new();
        let (mut depth, mut start, mut sign) = (0i32, 0usize, 1i32);
        let bytes = text.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                b'(' => depth += 1,
                b')' => depth -= 1,
                b'+' | b'-' if depth == 0 && i > 0 && bytes[i - 1] != b'^' && bytes[i - 1] != b',' => {
                    pieces.push((sign, &text[start..i]));
                    sign = if b == b'-' { -1 } else { 1 };
                    start = i + 1;
                }
                _ => {}
            }
        }
        pieces.push((sign, &text[start..]));
        if let Some((_, first)) = pieces.first() {
            if first.is_empty() && pieces.len() > 1 {
                pieces.remove(0);
            }
        }
        let terms = pieces.into_iter().map(|(sg, p)| parse_term(sg, p).map_err(|m| bad(m))).collect::<Result<Vec<_>>>()?;
        Ok(FormSpec { terms })
    }

    /// Coefficients a(0..prec) in S_k(Γ₀(N)), exact when every term is.
    pub fn build(&self, weight: u32, level: u64, prec: usize, data: &[NewformRecord], par: Parallelism) -> Result<Coefficients> {
        let prec = prec.max(2);
        let mut exact: Option<QSeries> = Some(QSeries::zero(prec));
        let mut float = vec![Complex64::new(0.0, 0.0); prec];
        for t in &self.terms {
            if level % t.delta != 0 {
                return Err(Error::invalid(format!("lift δ = {} does not divide N = {level}", t.delta)));
            }
            let base_prec = (prec - 1) / t.delta as usize + 1;
            let (c, atom_level) = atom_coefficients(&t.atom, weight, level / t.delta, base_prec, data, par)?;
            if (level / t.delta) % atom_level != 0 {
                return Err(Error::invalid(format!("{:?} has level {atom_level}, which times δ = {} does not divide {level}", t.atom, t.delta)));
            }
            let cf = rational_to_f64(&t.coefficient);
            for n in (0..prec).step_by(t.delta as usize) {
                float[n] += c.value(n / t.delta as usize) * cf;
            }
            exact = match (exact, c.exact()) {
                (Some(acc), Some(s)) => Some(acc.add(&s.substitute_power(t.delta as usize, prec)?.scale(&t.coefficient))),
                _ => None,
            };
        }
        Ok(match exact {
            Some(s) => Coefficients::Exact(s),
            None => Coefficients::Float(float),
        })
    }
}

fn parse_term(sign: i32, p: &str) -> std::result::Result<SpecTerm, String> {
    if p.is_empty() {
        return Err("empty term".into());
    }
    let (body, delta) = match p.rsplit_once('@') {
        Some((b, d)) => (b, d.parse::<u64>().map_err(|_| format!("bad lift {d:?}"))?),
        None => (p, 1),
    };
    if delta == 0 || !is_squarefree(delta).unwrap_or(false) {
        return Err(format!("lift δ = {delta} must be a positive square-free integer"));
    }
    let (coef, atom) = match body.split_once('*') {
        Some((c, a)) => (parse_rational(c)?, a),
        None => (BigRational::one(), body),
    };
    let coefficient = if sign < 0 { -coef } else { coef };
    Ok(SpecTerm { coefficient, atom: parse_atom(atom)?, delta })
}

fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let bad = || format!("bad coefficient {s:?}");
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n.parse().map_err(|_| bad())?, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn parse_atom(a: &str) -> std::result::Result<Atom, String> {
    if a == "delta" {
        return Ok(Atom::Delta);
    }
    if let Some(i) = a.strip_prefix("eigen") {
        return i.parse::<usize>().ok().filter(|&i| i >= 1).map(Atom::Eigen).ok_or_else(|| format!("bad eigenform index in {a:?}"));
    }
    if let Some(i) = a.strip_prefix("data") {
        return i.parse::<usize>().ok().filter(|&i| i >= 1).map(Atom::Data).ok_or_else(|| format!("bad data index in {a:?}"));
    }
    if let Some(inner) = a.strip_prefix("eta(").and_then(|r| r.strip_suffix(')')) {
        let factors = inner
            .split(',')
            .map(|f| {
                let (d, e) = f.split_once('^').ok_or_else(|| format!("eta factor {f:?} must look like d^e"))?;
                Ok((d.parse::<u64>().map_err(|_| format!("bad eta divisor {d:?}"))?, e.parse::<i32>().map_err(|_| format!("bad eta exponent {e:?}"))?))
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        return Ok(Atom::EtaQuotient(factors));
    }
    if a.split('.').count() == 3 {
        return Ok(Atom::Label(a.to_string()));
    }
    Err(format!("unknown form {a:?}"))
}

fn record_coefficients(r: &NewformRecord, weight: u32, prec: usize) -> Result<(Coefficients, u64)> {
    if r.weight != weight {
        return Err(Error::invalid(format!("{} has weight {}, not {weight}", r.label, r.weight)));
    }
    if r.prec() + 1 < prec {
        return Err(Error::PrecisionExceeded { requested: prec - 1, available: r.prec() });
    }
    let c = match r.exact() {
        Some(e) => Coefficients::Exact(QSeries::from_integers(e[..prec].iter().cloned())),
        None => Coefficients::Float((0..prec).map(|n| if n == 0 { Complex64::new(0.0, 0.0) } else { r.coefficient(n).expect("checked") }).collect()),
    };
    Ok((c, r.level))
}

/// Coefficients of one atom with `prec` terms, and the atom's own level. `level` is
/// the level available to the atom after its lift.
fn atom_coefficients(atom: &Atom, weight: u32, level: u64, prec: usize, data: &[NewformRecord], par: Parallelism) -> Result<(Coefficients, u64)> {
    match atom {
        Atom::Delta => {
            if weight != 12 {
                return Err(Error::invalid(format!("delta has weight 12, not {weight}")));
            }
            Ok((Coefficients::Exact(crate::modforms::delta(prec)?), 1))
        }
        Atom::Eigen(i) => {
            let forms = level1_newforms(weight, prec.saturating_sub(1).max(1), par)?;
            let r = forms.get(i - 1).ok_or_else(|| Error::invalid(format!("S_{weight}(1) has {} eigenforms; eigen{i} does not exist", forms.len())))?;
            record_coefficients(r, weight, prec)
        }
        Atom::Label(l) => record_coefficients(&builtin_newform(l, prec.saturating_sub(1).max(1), par)?, weight, prec),
        Atom::Data(i) => record_coefficients(data.get(i - 1).ok_or_else(|| Error::invalid(format!("no data record {i}")))?, weight, prec),
        Atom::EtaQuotient(factors) => {
            // the smallest level divisible by every d works
            let own = factors.iter().fold(1u64, |acc, &(d, _)| acc / gcd(acc, d) * d);
            let q = eta_quotient(factors, level.max(own), weight, prec)?;
            Ok((Coefficients::Exact(q.without_meta()), own))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub weight: u32,
    pub level: u64,
    pub spec: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub eps: f64,
    pub a0: f64,
    pub search_limit: usize,
    /// Coefficients matched in the decomposition (raised to 4× the unknowns when smaller).
    pub decomposition_prec: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { eps: DEFAULT_EPS, a0: 1.0, search_limit: 200, decomposition_prec: 60 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub spec: String,
    pub weight: u32,
    pub level: u64,
    pub observed_min_sf: Option<u64>,
    pub zero_test: Option<ZeroTest>,
    pub search_limit: usize,
    pub eps: f64,
    /// k^{3+ε}N^{7/2+ε} with implied constant 1.
    pub theorem_bound: f64,
    pub legacy_bound_log: f64,
    pub d0: Option<u64>,
    /// kN/d₀, the proxy for the new-space dimension bound on r.
    pub r_proxy: Option<f64>,
    pub satisfied: bool,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl ThresholdReport {
    pub const CSV_HEADER: [&'static str; 13] =
        ["spec", "k", "N", "observed_min_sf", "zero_test", "search_limit", "eps", "theorem_bound", "legacy_bound_log", "d0", "r_proxy", "satisfied", "error"];

    /// One CSV row with fixed float formatting, in `CSV_HEADER` order.
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.spec.clone(),
            self.weight.to_string(),
            self.level.to_string(),
            opt(self.observed_min_sf.map(|n| n.to_string())),
            opt(self.zero_test.map(|z| format!("{z:?}").to_lowercase())),
            self.search_limit.to_string(),
            format!("{:.6}", self.eps),
            format!("{:.12e}", self.theorem_bound),
            format!("{:.12e}", self.legacy_bound_log),
            opt(self.d0.map(|d| d.to_string())),
            opt(self.r_proxy.map(|r| format!("{r:.6}"))),
            self.satisfied.to_string(),
            opt(self.error.clone()),
        ]
    }
}

/// One report per entry, in input order; a failing entry never aborts the scan.
pub fn scan(grid: &[ScanEntry], config: &ScanConfig, data: &[NewformRecord], par: Parallelism) -> Vec<ThresholdReport> {
    map_collect(grid.len(), par, |i| scan_entry(&grid[i], config, data))
}

fn scan_entry(e: &ScanEntry, cfg: &ScanConfig, data: &[NewformRecord]) -> ThresholdReport {
    let seq = Parallelism::Sequential;
    let mut report = ThresholdReport {
        spec: e.spec.clone(),
        weight: e.weight,
        level: e.level,
        observed_min_sf: None,
        zero_test: None,
        search_limit: cfg.search_limit,
        eps: cfg.eps,
        theorem_bound: theorem_bound(e.weight, e.level, cfg.eps).unwrap_or(f64::NAN),
        legacy_bound_log: legacy_bound_log(e.weight, e.level, cfg.a0).unwrap_or(f64::NAN),
        d0: None,
        r_proxy: None,
        satisfied: false,
        notes: Vec::new(),
        error: None,
    };
    let built = FormSpec::parse(&e.spec).and_then(|s| s.build(e.weight, e.level, cfg.search_limit.max(cfg.decomposition_prec) + 1, data, seq));
    let f = match built {
        Ok(f) => f,
        Err(err) => {
            report.error = Some(format!("{}: {err}", err.kind()));
            return report;
        }
    };
    match min_squarefree_nonzero(&f, cfg.search_limit) {
        Ok(m) => {
            report.observed_min_sf = m.n;
            report.zero_test = Some(m.regime);
            report.satisfied = m.n.is_some_and(|n| (n as f64) <= report.theorem_bound);
        }
        Err(err) => report.error = Some(format!("{}: {err}", err.kind())),
    }
    let decomposition = builtin_newforms_for(e.weight, e.level, cfg.decomposition_prec.max(1), seq)
        .and_then(|mut basis| {
            basis.extend(data.iter().filter(|r| r.weight == e.weight && e.level % r.level == 0).cloned());
            let u = lift_columns(&basis, e.level, 1)?.len();
            let prec = cfg.decomposition_prec.max(4 * u);
            if prec > cfg.decomposition_prec {
                basis = builtin_newforms_for(e.weight, e.level, prec, seq)?;
                basis.extend(data.iter().filter(|r| r.weight == e.weight && e.level % r.level == 0).cloned());
            }
            let f = if f.prec() > prec { f.clone() } else { FormSpec::parse(&e.spec)?.build(e.weight, e.level, prec + 1, data, seq)? };
            decompose(&f, &basis, e.level, 1, prec)
        });
    match decomposition {
        Ok(d) => {
            report.d0 = Some(d.d0);
            report.r_proxy = Some(e.weight as f64 * e.level as f64 / d.d0 as f64);
            report.notes.push("basis completeness trusted".into());
        }
        Err(err) => report.notes.push(format!("decomposition: {}: {err}", err.kind())),
    }
    report
}
