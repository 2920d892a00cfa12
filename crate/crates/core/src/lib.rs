//! Numerical laboratory for square-free Fourier coefficient thresholds of cusp forms.
//!
//! The crate is organised bottom-up:
//!
//! - [`arith`]: sieves, Möbius function, divisor sums, square-free divisors.
//! - [`qseries`]: exact truncated q-expansions over the rationals.
//! - [`modseries`]: multi-modular (NTT) integer expansions for long precisions.
//! - [`modforms`]: Eisenstein series, Δ, eta quotients, Hecke operators, eigenforms.
//! - [`newform_io`]: the `.nf` newform interchange format and record validation.
//! - [`weights`]: smooth bump weights and their Mellin transforms.
//! - [`rslfun`]: Satake parameters, Euler factors, weighted square-free sums,
//!   the Mellin-inversion contour oracle and the residue constant.
//! - [`threshold`]: newform decomposition, `d0`, minimal square-free
//!   nonvanishing index, bound formulas, asymptotic fits and scans.
//!
//! Data-parallel loops go through [`par`], which runs on rayon when the
//! `parallel` feature is enabled and falls back to plain iterators otherwise.

pub mod arith;
pub mod error;
mod linalg;
pub mod modforms;
pub mod modseries;
pub mod newform_io;
pub mod par;
pub mod qseries;
pub mod rslfun;
pub mod threshold;
pub mod weights;

pub use error::{Error, Result};
pub use par::Parallelism;
