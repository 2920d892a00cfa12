//! Exact Gaussian elimination over Q.

use num_rational::BigRational;
use num_traits::{One, Zero};

/// Reduced row-echelon form in place; returns the pivot column of each nonzero row.
pub(crate) fn rref(m: &mut Vec<Vec<BigRational>>) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(sel) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, sel);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r.max(0));
    pivots
}

/// Solves the square system `a x = b`; `None` if `a` is singular.
pub(crate) fn solve(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut aug: Vec<Vec<BigRational>> = a.iter().zip(b).map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect()).collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n].clone()).collect())
}

/// Least-squares-free exact solve of an overdetermined system `a x = b` (rows >= cols):
/// returns `Some(x)` iff `a` has full column rank and the system is consistent.
pub(crate) fn solve_overdetermined(a: &[Vec<BigRational>], b: &[BigRational]) -> std::result::Result<Vec<BigRational>, OverdeterminedFailure> {
    let cols = a.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<BigRational>> = a.iter().zip(b).map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect()).collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return Err(OverdeterminedFailure::Inconsistent);
    }
    if pivots.len() != cols {
        return Err(OverdeterminedFailure::RankDeficient(pivots.len()));
    }
    Ok(aug.into_iter().take(cols).map(|row| row[cols].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum OverdeterminedFailure {
    RankDeficient(usize),
    Inconsistent,
}

pub(crate) fn identity(n: usize) -> Vec<Vec<BigRational>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()).collect()
}
