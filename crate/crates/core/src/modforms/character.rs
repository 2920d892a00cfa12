use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, gcd, squarefree_divisors};
use crate::{Error, Result};

const ROOT_OF_UNITY_TOL: f64 = 1e-12;

/// A Dirichlet character given by its value table modulo `modulus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterTable {
    modulus: u64,
    conductor: u64,
    values: Vec<Complex64>,
}

impl CharacterTable {
    pub fn trivial(modulus: u64) -> Self {
        let modulus = modulus.max(1);
        let values = (0..modulus)
            .map(|n| if gcd(n, modulus) == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        CharacterTable { modulus, conductor: 1, values }
    }

    /// The real character n ↦ (d/n) (Kronecker symbol) on (Z/modulus)^×.
    /// `d` must be a fundamental discriminant whose absolute value divides `modulus`.
    pub fn kronecker(d: i64, modulus: u64) -> Result<Self> {
        if d == 0 || d == 1 || modulus % d.unsigned_abs() != 0 || !is_fundamental_discriminant(d) {
            return Err(Error::invalid(format!("{d} is not a fundamental discriminant dividing {modulus}")));
        }
        let values = (0..modulus)
            .map(|n| {
                if gcd(n, modulus) != 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(kronecker_symbol(d, n) as f64, 0.0)
                }
            })
            .collect();
        Self::from_values(modulus, values)
    }

    /// Validates a value table and derives the conductor.
    pub fn from_values(modulus: u64, values: Vec<Complex64>) -> Result<Self> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(Error::invalid("character table length must equal the modulus"));
        }
        for (n, v) in values.iter().enumerate() {
            let coprime = gcd(n as u64, modulus) == 1;
            if coprime && (v.norm() - 1.0).abs() > ROOT_OF_UNITY_TOL {
                return Err(Error::InconsistentData(format!("character value at {n} is not a root of unity")));
            }
            if !coprime && v.norm() != 0.0 {
                return Err(Error::InconsistentData(format!("character value at {n} must vanish")));
            }
        }
        if modulus > 1 && (values[1] - Complex64::new(1.0, 0.0)).norm() > ROOT_OF_UNITY_TOL {
            return Err(Error::InconsistentData("character must send 1 to 1".into()));
        }
        let n = modulus as usize;
        for a in 0..n {
            for b in a..n {
                let ab = a * b % n;
                if (values[ab] - values[a] * values[b]).norm() > 1e-9 {
                    return Err(Error::InconsistentData(format!("character is not multiplicative at ({a}, {b})")));
                }
            }
        }
        let mut table = CharacterTable { modulus, conductor: modulus, values };
        table.conductor = table.compute_conductor();
        Ok(table)
    }

    fn compute_conductor(&self) -> u64 {
        let n = self.modulus;
        for d in divisors(n).expect("modulus >= 1") {
            let induced = (1..n)
                .filter(|&m| gcd(m, n) == 1 && m % d == 1 % d)
                .all(|m| (self.values[m as usize] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            if induced {
                return d;
            }
        }
        n
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }

    pub fn is_trivial(&self) -> bool {
        self.conductor == 1
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im.abs() < 1e-12)
    }

    /// χ(n) as an exact rational when the value is 0 or ±1.
    pub fn rational_value(&self, n: u64) -> Option<BigRational> {
        let v = self.value(n);
        if v.im.abs() > 1e-12 {
            return None;
        }
        [-1i64, 0, 1]
            .into_iter()
            .find(|&c| (v.re - c as f64).abs() < 1e-12)
            .map(|c| BigRational::from_integer(BigInt::from(c)))
    }

    /// Whether `modulus / conductor` is square-free.
    pub fn has_squarefree_quotient(&self) -> bool {
        let q = self.modulus / self.conductor;
        squarefree_divisors(q).map(|ds| ds.last() == Some(&q)).unwrap_or(false)
    }

    /// The same character viewed modulo a multiple `m` of the modulus.
    pub fn extend_to(&self, m: u64) -> Result<Self> {
        if m % self.modulus != 0 {
            return Err(Error::invalid(format!("{m} is not a multiple of the modulus {}", self.modulus)));
        }
        let values = (0..m).map(|n| if gcd(n, m) == 1 { self.value(n) } else { Complex64::new(0.0, 0.0) }).collect();
        Ok(CharacterTable { modulus: m, conductor: self.conductor, values })
    }
}

fn is_fundamental_discriminant(d: i64) -> bool {
    let sf = |n: u64| crate::arith::mobius(n).map(|m| m != 0).unwrap_or(false);
    let r = d.rem_euclid(4);
    if r == 1 {
        sf(d.unsigned_abs())
    } else if r == 0 {
        let m = d / 4;
        let rm = m.rem_euclid(4);
        (rm == 2 || rm == 3) && sf(m.unsigned_abs())
    } else {
        false
    }
}

/// Kronecker symbol (d/n) for n >= 1.
fn kronecker_symbol(d: i64, n: u64) -> i32 {
    let mut result = 1i32;
    let mut n = n;
    while n % 2 == 0 {
        n /= 2;
        match d.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => result = -result,
            _ => return 0,
        }
    }
    // Jacobi symbol (d / n) for odd n
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        a %= m;
    }
    if m == 1 { result } else { 0 }
}
