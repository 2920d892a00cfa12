use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use sfcoeff_core::arith::primes_up_to;
use sfcoeff_core::modforms::{builtin_labels, builtin_newform, level1_newforms, NewformRecord};
use sfcoeff_core::rslfun::exact::{h1_series_exact, GaussianRational};
use sfcoeff_core::rslfun::*;
use sfcoeff_core::weights::SmoothWeight;
use sfcoeff_core::{Error, Parallelism};

const PAR: Parallelism = Parallelism::Parallel;

fn delta() -> &'static NewformRecord {
    static D: OnceLock<NewformRecord> = OnceLock::new();
    D.get_or_init(|| level1_newforms(12, 100_000, PAR).unwrap().remove(0))
}

fn s24() -> &'static [NewformRecord] {
    static S: OnceLock<Vec<NewformRecord>> = OnceLock::new();
    S.get_or_init(|| level1_newforms(24, 20_000, PAR).unwrap())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Σ_{n<=M} n^{-s} plus the integral and half-term corrections.
fn zeta_oracle(s: f64) -> f64 {
    let m = 1_000_000u64;
    let head: f64 = (1..=m).rev().map(|n| (n as f64).powf(-s)).sum();
    head + (m as f64).powf(1.0 - s) / (s - 1.0) - 0.5 * (m as f64).powf(-s)
}

#[test]
fn h_product_matches_inverse_zeta() {
    let pi = std::f64::consts::PI;
    let h1 = h_product(delta(), delta(), c(1.0), 1, 100_000, PAR).unwrap();
    assert!((h1.re - 6.0 / (pi * pi)).abs() < 1e-4);
    for s in [0.75, 1.0, 2.0] {
        let h = h_product(delta(), delta(), c(s), 1, 100_000, PAR).unwrap();
        assert!((h.re - 1.0 / zeta_oracle(2.0 * s)).abs() < 1e-3, "s = {s}");
        assert!((zeta(2.0 * s).unwrap() - zeta_oracle(2.0 * s)).abs() < 1e-9);
    }
}

fn rational(n: i64, d: u32) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d as i64 + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn h1_linear_coefficient_vanishes_exactly(tf in (-500i64..500, 0u32..400), tg in (-500i64..500, 0u32..400)) {
        let u = GaussianRational::unit_circle_point(&rational(tf.0, tf.1));
        let v = GaussianRational::unit_circle_point(&rational(tg.0, tg.1));
        let s = h1_series_exact(&[u.clone(), u.conj()], &[v.clone(), v.conj()], 3);
        prop_assert!(s[0] == GaussianRational::one());
        prop_assert!(s[1].is_zero());
    }

    #[test]
    fn diagonal_sums_are_nonnegative(x in 2.0f64..20_000.0) {
        let r = direct_weighted_sum(delta(), delta(), &SmoothWeight::default(), x, 1, Parallelism::Sequential).unwrap();
        prop_assert!(r.value.re >= 0.0 && r.value.im == 0.0);
    }

    #[test]
    fn conjugation_symmetry(x in 2.0f64..20_000.0) {
        let w = SmoothWeight::default();
        let (f, g) = (&s24()[0], &s24()[1]);
        let a = direct_weighted_sum(f, g, &w, x, 1, Parallelism::Sequential).unwrap().value;
        let b = direct_weighted_sum(g, f, &w, x, 1, Parallelism::Sequential).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn h1_partial_products_converge_at_three_quarters() {
    let s = c(0.75);
    let (f, g) = (&s24()[0], &s24()[1]);
    let a = h1_product(f, g, s, 1, 1_000, PAR).unwrap();
    let b = h1_product(f, g, s, 1, 10_000, PAR).unwrap();
    assert!((a - b).norm() < 1e-3);
    // diagonal: the X² coefficient is −(λ² − 1)², bounded by 9
    let a = h1_product(delta(), delta(), s, 1, 1_000, PAR).unwrap();
    let b = h1_product(delta(), delta(), s, 1, 10_000, PAR).unwrap();
    let tail: f64 = primes_up_to(10_000).into_iter().filter(|&p| p > 1_000).map(|p| (p as f64).powf(-1.5)).sum();
    assert!((a - b).norm() < 9.0 * tail * a.norm());
}

#[test]
fn rs_truncation_within_tail_bound() {
    let s = c(2.0);
    let a = rs_lfun_truncated(delta(), delta(), s, 1_000, PAR).unwrap();
    let b = rs_lfun_truncated(delta(), delta(), s, 10_000, PAR).unwrap();
    assert!((a.value.ln() - b.value.ln()).norm() < a.tail_bound);
    assert!(b.tail_bound < a.tail_bound);
    assert!(matches!(rs_lfun_truncated(delta(), delta(), c(1.0), 1_000, PAR), Err(Error::InvalidArgument(_))));
    assert!(matches!(rs_lfun_truncated(delta(), delta(), s, 200_000, PAR), Err(Error::PrecisionExceeded { .. })));
}

#[test]
fn rs_product_is_mode_independent() {
    let s = Complex64::new(1.5, 4.0);
    let a = rs_lfun_truncated(&s24()[0], &s24()[1], s, 20_000, Parallelism::Sequential).unwrap();
    let b = rs_lfun_truncated(&s24()[0], &s24()[1], s, 20_000, Parallelism::Parallel).unwrap();
    assert_eq!(a.value, b.value);
}

fn params(x: f64, t_max: f64) -> ContourParams {
    ContourParams { sigma0: 2.0, t_max, p_cutoff: x.ceil() as u64 }
}

#[test]
fn contour_matches_direct_for_delta() {
    let w = SmoothWeight::default();
    let d = direct_weighted_sum(delta(), delta(), &w, 100.0, 1, PAR).unwrap();
    let o = contour_sum_oracle(delta(), delta(), &w, 100.0, 1, params(100.0, 400.0), PAR).unwrap();
    assert_eq!(o.method, SumMethod::Contour);
    assert!((d.value - o.value).norm() / d.value.norm() < 1e-4);
    let empty = contour_sum_oracle(delta(), delta(), &w, 2.0, 1, params(2.0, 400.0), PAR).unwrap();
    assert!(empty.value.norm() < 1e-6);
    assert_eq!(direct_weighted_sum(delta(), delta(), &w, 2.0, 1, PAR).unwrap().terms, 0);
    // halving T: the error grows but stays under the reported tail
    let half = contour_sum_oracle(delta(), delta(), &w, 100.0, 1, params(100.0, 200.0), PAR).unwrap();
    let (e_full, e_half) = ((o.value - d.value).norm(), (half.value - d.value).norm());
    assert!(e_half > e_full);
    assert!(e_half <= half.tail_estimate);
}

#[test]
fn contour_rejects_bad_input() {
    let w = SmoothWeight::default();
    let bad = ContourParams { sigma0: 1.2, t_max: 400.0, p_cutoff: 100 };
    assert!(matches!(contour_sum_oracle(delta(), delta(), &w, 100.0, 1, bad, PAR), Err(Error::InvalidArgument(_))));
    let short = ContourParams { sigma0: 2.0, t_max: 400.0, p_cutoff: 50 };
    assert!(contour_sum_oracle(delta(), delta(), &w, 100.0, 1, short, PAR).is_err());
    assert!(matches!(contour_sum_oracle(delta(), delta(), &w, 2000.0, 1, params(2000.0, 60.0), PAR), Err(Error::QuadratureFailure(_))));
}

#[test]
fn mellin_inversion_for_builtin_pairs() {
    let w = SmoothWeight::default();
    let forms: Vec<NewformRecord> = builtin_labels().iter().map(|l| builtin_newform(l, 500, PAR).unwrap()).collect();
    for (i, f) in forms.iter().enumerate() {
        for g in forms[i..].iter().filter(|g| g.level == f.level) {
            for x in [50.0, 100.0, 500.0] {
                let d = direct_weighted_sum(f, g, &w, x, f.level, PAR).unwrap().value;
                let o = contour_sum_oracle(f, g, &w, x, f.level, params(x, 400.0), PAR).unwrap().value;
                assert!((d - o).norm() / (1.0 + d.norm()) < 1e-3, "{} × {} at x = {x}", f.label, g.label);
            }
        }
    }
}

#[test]
fn residue_is_stable_in_cutoff() {
    let a = residue_estimate(delta(), 1, 10_000, &DEFAULT_DELTA_GRID, PAR).unwrap();
    let b = residue_estimate(delta(), 1, 100_000, &DEFAULT_DELTA_GRID, PAR).unwrap();
    assert!(a.residue > 0.0 && b.residue > 0.0);
    assert!((a.residue - b.residue).abs() / b.residue < 0.05);
}

#[test]
fn c_constant_matches_direct_slope() {
    let w = SmoothWeight::default();
    let cc = c_constant(delta(), &w, 1, 100_000, PAR).unwrap();
    assert!(cc.value > 0.0);
    let doubled = c_constant(delta(), &w.scaled(2.0).unwrap(), 1, 100_000, PAR).unwrap();
    assert_eq!(doubled.value, 2.0 * cc.value);
    // least-squares slope through the origin over a geometric grid
    let xs: Vec<f64> = (0..12).map(|i| 1e3 * 100f64.powf(i as f64 / 11.0)).collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &x in &xs {
        let s = direct_weighted_sum(delta(), delta(), &w, x, 1, PAR).unwrap().value.re;
        sxy += x * s;
        sxx += x * x;
    }
    let slope = sxy / sxx;
    assert!(slope > 0.0);
    assert!((slope - cc.value).abs() / slope < 0.1, "slope {slope} vs {}", cc.value);
}

#[test]
fn c_constant_lower_bound_shape() {
    // C/ω̃(1) against (kN)^{-0.1}, with the implied constant fixed once for all forms
    let w = SmoothWeight::default();
    for label in builtin_labels() {
        let f = builtin_newform(&label, 10_000, PAR).unwrap();
        let cc = c_constant(&f, &w, f.level, 10_000, PAR).unwrap();
        let kn = (f.weight as f64) * (f.level as f64);
        assert!(cc.value / cc.mellin_at_one >= 0.1 * kn.powf(-0.1), "{label}: {}", cc.value);
    }
}
