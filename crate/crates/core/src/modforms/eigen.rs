use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::{charpoly, real_roots, RootInterval};
use super::record::{normalize_exact, NewformRecord, RecordSource};
use super::{hecke, FormSpace};
use crate::arith::gcd;
use crate::linalg::{identity, solve};
use crate::qseries::QSeries;
use crate::{Error, Result};

pub const DEFAULT_PROBES: [u64; 4] = [2, 3, 5, 7];

/// Root-isolation width for irrational eigenvalues: 2^-70 (below 10^-20).
fn root_width() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << 70)
}

/// A Hecke eigenform in a cuspidal space, normalized to a(1) = 1.
#[derive(Clone, Debug)]
pub struct Eigenform {
    /// Eigenvalue of the splitting probe T_p; `exact` is set when rational.
    pub eigenvalue: RootInterval,
    pub probe: u64,
    /// Coordinates in the space's echelon basis.
    pub coords: Vec<BigRational>,
    /// Σ coords_j · basis_j (approximate when the eigenvalue is irrational).
    pub expansion: QSeries,
}

impl Eigenform {
    pub fn is_exact(&self) -> bool {
        self.eigenvalue.exact.is_some()
    }
}

/// Matrix of T_p on the echelon basis: column j holds the coordinates of T_p b_j.
pub fn hecke_matrix(space: &FormSpace, p: u64) -> Result<Vec<Vec<BigRational>>> {
    let pivots = space.pivots();
    let d = space.dim();
    let mut m = vec![vec![BigRational::zero(); d]; d];
    for (j, b) in space.basis.iter().enumerate() {
        let t = hecke(b, p, space.weight, space.level, &space.character)?;
        let top = *pivots.last().expect("nonempty space");
        if t.prec() <= top {
            return Err(Error::PrecisionExceeded { requested: p as usize * (top + 1), available: b.prec() });
        }
        for (i, &piv) in pivots.iter().enumerate() {
            m[i][j] = t.coeffs()[piv].clone();
        }
    }
    Ok(m)
}

/// Simultaneous eigenforms of the space, sorted by the splitting eigenvalue.
pub fn eigenforms(space: &FormSpace, probes: &[u64]) -> Result<Vec<Eigenform>> {
    let d = space.dim();
    if d == 0 {
        return Ok(Vec::new());
    }
    let pivots = space.pivots();
    if pivots[0] != 1 {
        return Err(Error::InconsistentData("every form in the space has a(1) = 0".into()));
    }
    for &p in probes {
        if gcd(p, space.level) != 1 {
            return Err(Error::invalid(format!("probe prime {p} divides the level {}", space.level)));
        }
    }
    for &p in probes {
        let m = hecke_matrix(space, p)?;
        let cp = charpoly(&m);
        if !cp.is_squarefree() {
            continue;
        }
        let roots = real_roots(&cp, &root_width());
        if roots.len() != d {
            return Err(Error::InternalInconsistency(format!("T_{p} has non-real eigenvalues on a space with trivial character")));
        }
        return roots.into_iter().map(|r| eigenvector(space, &m, p, r)).collect();
    }
    Err(Error::NeedsMorePrimes(format!("none of {probes:?} has a square-free characteristic polynomial")))
}

fn eigenvector(space: &FormSpace, m: &[Vec<BigRational>], p: u64, root: RootInterval) -> Result<Eigenform> {
    let d = m.len();
    let theta = root.midpoint();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    for (i, row) in identity(d).into_iter().enumerate() {
        a[i][i] -= &theta * &row[i];
    }
    // v_0 = 1; drop one equation and solve for the rest
    let coords = if d == 1 {
        vec![BigRational::one()]
    } else {
        let mut found = None;
        for drop in (0..d).rev() {
            let rows: Vec<usize> = (0..d).filter(|&i| i != drop).collect();
            let lhs: Vec<Vec<BigRational>> = rows.iter().map(|&i| a[i][1..].to_vec()).collect();
            let rhs: Vec<BigRational> = rows.iter().map(|&i| -a[i][0].clone()).collect();
            if let Some(rest) = solve(&lhs, &rhs) {
                let mut v = vec![BigRational::one()];
                v.extend(rest);
                if root.exact.is_none() || residual_is_zero(&a, &v) {
                    found = Some(v);
                    break;
                }
            }
        }
        found.ok_or_else(|| Error::InternalInconsistency(format!("no normalized eigenvector for T_{p}")))?
    };
    let prec = space.prec();
    let mut expansion = QSeries::zero(prec);
    for (c, b) in coords.iter().zip(&space.basis) {
        expansion = expansion.add(&b.scale(c));
    }
    if let Some(meta) = space.basis[0].meta() {
        expansion = expansion.with_meta(meta)?;
    }
    Ok(Eigenform { eigenvalue: root, probe: p, coords, expansion })
}

fn residual_is_zero(a: &[Vec<BigRational>], v: &[BigRational]) -> bool {
    a.iter().all(|row| row.iter().zip(v).fold(BigRational::zero(), |acc, (x, y)| acc + x * y).is_zero())
}

impl Eigenform {
    /// λ-normalized record over the known precision of the expansion.
    pub fn to_record(&self, space: &FormSpace, label: impl Into<String>) -> Result<NewformRecord> {
        let c = self.expansion.coeffs();
        let mut lambda = vec![Complex64::new(0.0, 0.0)];
        lambda.extend(c.iter().enumerate().skip(1).map(|(n, a)| Complex64::new(normalize_exact(a, n as u64, space.weight), 0.0)));
        let mut rec = NewformRecord::new(space.level, space.weight, space.character.clone(), lambda, RecordSource::Computed, label)?;
        if self.is_exact() {
            if let Some(ints) = self.expansion.integer_coeffs() {
                rec.set_exact(ints);
            }
        }
        Ok(rec)
    }
}

/// Normalized eigenforms of the space as records labelled `{N}.{k}.{a,b,...}`.
pub fn eigenbasis(space: &FormSpace, probes: &[u64]) -> Result<Vec<NewformRecord>> {
    eigenforms(space, probes)?
        .iter()
        .enumerate()
        .map(|(i, f)| f.to_record(space, form_label(space.level, space.weight, i)))
        .collect()
}

pub(crate) fn form_label(level: u64, weight: u32, index: usize) -> String {
    let mut suffix = String::new();
    let mut i = index;
    loop {
        suffix.insert(0, (b'a' + (i % 26) as u8) as char);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    format!("{level}.{weight}.{suffix}")
}
