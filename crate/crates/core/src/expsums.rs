//! Ramanujan sums `c_q(n)` (brute-force defining sum and the closed form
//! `mu(q/(q,n)) * phi(q) / phi(q/(q,n))`) and Gauss sums
//! `tau(chi, k) = sum_a chi(a) e(ak/q)`, with the twist identity
//! `tau(chi, k) = chi(k) tau(chi)` and `tau(chi)^2 = chi(-1) q` for real
//! primitive characters.
//!
//! `e(theta)` means `exp(2 pi i theta)` throughout; the argument is reduced
//! mod 1 before scaling so large rationals keep full precision. Brute-force
//! sums use compensated summation and every integer recovery asserts its
//! rounding error instead of assuming it.

use num::complex::Complex64;
use num::integer::gcd;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::FactoredInt;
use crate::characters::Character;
use crate::kahan::KahanComplex;
use crate::{Error, Result};

/// Serializable complex value; reports use this instead of the internal
/// complex type.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

/// `e(theta) = exp(2 pi i theta)`, with `theta` reduced mod 1 first.
pub fn e2pi(theta: f64) -> Complex64 {
    let t = theta - theta.floor();
    let (sin, cos) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(cos, sin)
}

/// Table of the `q`-th roots of unity `e(j/q)`, `j = 0..q-1`.
pub fn unit_root_table(q: u64) -> Vec<Complex64> {
    (0..q).map(|j| e2pi(j as f64 / q as f64)).collect()
}

#[inline]
fn mulmod_i(a: u64, n: i64, q: u64) -> u64 {
    (a as i128 * n as i128).rem_euclid(q as i128) as u64
}

/// `c_q(n)` by evaluating the defining sum over residues coprime to `q`
/// in floating point and rounding. The pre-rounding imaginary part and
/// rounding error must stay below `1e-6 * q`.
pub fn ramanujan_brute(q: u64, n: i64) -> Result<i64> {
    if q == 0 {
        return Err(Error::invalid("ramanujan_brute: q must be >= 1"));
    }
    let roots = unit_root_table(q);
    let mut acc = KahanComplex::new();
    for a in 1..=q {
        if gcd(a, q) == 1 {
            acc.add(roots[mulmod_i(a, n, q) as usize]);
        }
    }
    let sum = acc.value();
    let tol = 1e-6 * q as f64;
    let rounded = sum.re.round();
    if sum.im.abs() > tol || (sum.re - rounded).abs() > tol {
        return Err(Error::invariant(
            "ramanujan_brute_integrality",
            format!("c_{q}({n}) evaluated to {sum}, not within {tol} of an integer"),
        ));
    }
    Ok(rounded as i64)
}

/// `c_q(n)` via the closed form; exact integer arithmetic throughout
/// (the totient division is exact and is checked).
pub fn ramanujan_closed(q: u64, n: i64) -> Result<i64> {
    if q == 0 {
        return Err(Error::invalid("ramanujan_closed: q must be >= 1"));
    }
    let g = gcd(q, n.unsigned_abs() % q);
    let m = if g == 0 { 1 } else { q / g };
    let fm = FactoredInt::factor(m)?;
    let mu = fm.moebius();
    if mu == 0 {
        return Ok(0);
    }
    let phi_q = FactoredInt::factor(q)?.phi();
    let phi_m = fm.phi();
    if phi_q % phi_m != 0 {
        return Err(Error::invariant(
            "ramanujan_closed_divisibility",
            format!("phi({m}) = {phi_m} does not divide phi({q}) = {phi_q}"),
        ));
    }
    Ok(mu * (phi_q / phi_m) as i64)
}

/// Full table of `c_q(k)` for `k = 1..q`, built from the closed form with
/// the divisor values precomputed; entries are independent so the fill is
/// parallel and exact.
#[derive(Debug, Clone, Serialize)]
pub struct RamanujanProfile {
    pub q: u64,
    /// `values[k-1] = c_q(k)` for `k = 1..=q`.
    pub values: Vec<i64>,
    /// `max_{1 <= k <= q-1} |c_q(k)|`; 0 when `q = 1`.
    pub max_proper: i64,
}

pub const PROFILE_LIMIT: u64 = 1_000_000;

pub fn ramanujan_profile(q: u64) -> Result<RamanujanProfile> {
    if q == 0 || q > PROFILE_LIMIT {
        return Err(Error::invalid(format!(
            "ramanujan_profile: q must be in 1..={PROFILE_LIMIT}"
        )));
    }
    let fq = FactoredInt::factor(q)?;
    let phi_q = fq.phi();
    let mut divisors = fq.divisors();
    divisors.sort_unstable();
    let c_for: Vec<i64> = divisors
        .iter()
        .map(|&d| {
            let fm = FactoredInt::factor(q / d).expect("positive divisor");
            let mu = fm.moebius();
            if mu == 0 {
                0
            } else {
                mu * (phi_q / fm.phi()) as i64
            }
        })
        .collect();
    let values: Vec<i64> = (1..=q)
        .into_par_iter()
        .map(|k| {
            let g = gcd(q, k);
            let idx = divisors.binary_search(&g).expect("gcd divides q");
            c_for[idx]
        })
        .collect();
    let max_proper = values[..values.len().saturating_sub(1)]
        .iter()
        .map(|v| v.abs())
        .max()
        .unwrap_or(0);
    debug_assert_eq!(values[q as usize - 1], phi_q as i64);
    Ok(RamanujanProfile {
        q,
        values,
        max_proper,
    })
}

impl RamanujanProfile {
    /// `c_q(k)` for `k` in `1..=q`.
    pub fn value(&self, k: u64) -> i64 {
        self.values[(k - 1) as usize]
    }
}

/// `tau(chi, k) = sum_{a=1}^{q} chi(a) e(ak/q)`, compensated.
pub fn gauss_sum(chi: &Character, k: i64) -> Complex64 {
    let q = chi.modulus();
    let roots = unit_root_table(q);
    let table = chi.values_table();
    let mut acc = KahanComplex::new();
    for a in 1..=q {
        let v = table[(a % q) as usize];
        if v != 0 {
            let r = roots[mulmod_i(a, k, q) as usize];
            acc.add(if v > 0 { r } else { -r });
        }
    }
    acc.value()
}

/// Both sides of the twist identity `tau(chi, k) = chi(k) tau(chi)`,
/// plus the modulus check `|tau(chi)| = sqrt(q)`; `max_deviation` is the
/// larger of the two discrepancies.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussTwistCheck {
    pub lhs: ComplexValue,
    pub rhs: ComplexValue,
    pub max_deviation: f64,
}

pub fn gauss_twist_check(chi: &Character, k: i64) -> GaussTwistCheck {
    let tau = gauss_sum(chi, 1);
    let lhs = gauss_sum(chi, k);
    let rhs = tau * chi.value(k) as f64;
    let twist_dev = (lhs - rhs).norm();
    let modulus_dev = (tau.norm() - (chi.modulus() as f64).sqrt()).abs();
    GaussTwistCheck {
        lhs: lhs.into(),
        rhs: rhs.into(),
        max_deviation: twist_dev.max(modulus_dev),
    }
}

/// `tau(chi)^2` against `chi(-1) q`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TauSquareCheck {
    pub tau_squared: ComplexValue,
    pub expected: ComplexValue,
    pub deviation: f64,
}

pub fn tau_square_check(chi: &Character) -> TauSquareCheck {
    let tau = gauss_sum(chi, 1);
    let tau_squared = tau * tau;
    let expected = Complex64::new(chi.parity() as f64 * chi.modulus() as f64, 0.0);
    TauSquareCheck {
        tau_squared: tau_squared.into(),
        expected: expected.into(),
        deviation: (tau_squared - expected).norm(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::fundamental_discriminants;
    use crate::characters::character_from_discriminant;

    #[test]
    fn brute_examples() {
        for n in [-3, 0, 1, 7] {
            assert_eq!(ramanujan_brute(1, n).unwrap(), 1);
        }
        assert_eq!(ramanujan_brute(6, 6).unwrap(), 2); // q | n gives phi(q)
        assert_eq!(ramanujan_brute(6, 1).unwrap(), 1); // 2 cos(pi/3)
        assert!(ramanujan_brute(0, 1).is_err());
    }

    #[test]
    fn closed_examples() {
        assert_eq!(ramanujan_closed(9, 3).unwrap(), -3);
        assert_eq!(ramanujan_closed(4, 2).unwrap(), -2);
        assert_eq!(ramanujan_closed(12, 12).unwrap(), 4);
        assert_eq!(ramanujan_closed(9, 3).unwrap(), ramanujan_brute(9, 3).unwrap());
        assert_eq!(ramanujan_closed(4, 2).unwrap(), ramanujan_brute(4, 2).unwrap());
    }

    #[test]
    fn oracle_equivalence_small() {
        for q in 1..=60 {
            for n in 1..=q {
                assert_eq!(
                    ramanujan_closed(q, n as i64).unwrap(),
                    ramanujan_brute(q, n as i64).unwrap(),
                    "q={q} n={n}"
                );
            }
        }
    }

    #[test]
    fn depends_only_on_gcd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..500 {
            let q = rng.gen_range(1..=300u64);
            let n = rng.gen_range(-600..=600i64);
            let g = gcd(q, n.unsigned_abs() % q) as i64;
            let g = if g == 0 { q as i64 } else { g };
            assert_eq!(
                ramanujan_closed(q, n).unwrap(),
                ramanujan_closed(q, g).unwrap(),
                "q={q} n={n}"
            );
        }
    }

    #[test]
    fn profile_examples() {
        let p7 = ramanujan_profile(7).unwrap();
        assert_eq!(p7.max_proper, 1);
        assert_eq!(p7.value(7), 6);

        let p12 = ramanujan_profile(12).unwrap();
        assert_eq!(p12.value(6), -4);
        assert!(p12.max_proper >= 4);

        let p4 = ramanujan_profile(4).unwrap();
        assert_eq!(p4.values, vec![0, -2, 0, 2]);
        for k in 1..=4u64 {
            assert_eq!(p4.value(k), ramanujan_brute(4, k as i64).unwrap());
        }
    }

    #[test]
    fn prime_profiles_stay_bounded_composites_blow_up() {
        for q in [2u64, 3, 5, 7, 11, 101, 199] {
            let p = ramanujan_profile(q).unwrap();
            if q > 1 {
                assert_eq!(p.max_proper, 1, "prime q={q}");
            }
        }
        let found = (4..=100u64).any(|q| {
            let f = FactoredInt::factor(q).unwrap();
            if f.factors().len() == 1 && f.factors()[0].1 == 1 {
                return false; // prime
            }
            let p = ramanujan_profile(q).unwrap();
            p.max_proper as u64 * 2 >= f.phi()
        });
        assert!(found, "no composite q <= 100 with max >= phi(q)/2");
    }

    #[test]
    fn gauss_sum_examples() {
        let chi4 = character_from_discriminant(-4).unwrap();
        let tau = gauss_sum(&chi4, 1);
        assert!((tau - Complex64::new(0.0, 2.0)).norm() < 1e-12);

        for d in [-3, -4, 5, 8, -7] {
            let chi = character_from_discriminant(d).unwrap();
            assert!(gauss_sum(&chi, 0).norm() < 1e-12, "d={d}");
        }

        let chi5 = character_from_discriminant(5).unwrap();
        let tau5 = gauss_sum(&chi5, 1);
        assert!((tau5 - Complex64::new(5.0f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn twist_examples() {
        let chi4 = character_from_discriminant(-4).unwrap();
        let check = gauss_twist_check(&chi4, 3);
        assert!(check.max_deviation <= 1e-9);
        assert!((check.lhs.re).abs() < 1e-9 && (check.lhs.im + 2.0).abs() < 1e-9);

        let chi3 = character_from_discriminant(-3).unwrap();
        let check = gauss_twist_check(&chi3, 3);
        assert!(check.lhs.re.abs() < 1e-9 && check.lhs.im.abs() < 1e-9);
        assert!(check.rhs.re.abs() < 1e-9 && check.rhs.im.abs() < 1e-9);

        let chi5 = character_from_discriminant(5).unwrap();
        assert!(gauss_twist_check(&chi5, 2).max_deviation <= 1e-9);
    }

    #[test]
    fn tau_square_examples() {
        for (d, want) in [(-3i64, -3.0), (-4, -4.0), (5, 5.0)] {
            let chi = character_from_discriminant(d).unwrap();
            let check = tau_square_check(&chi);
            assert!(check.deviation <= 1e-9, "d={d}");
            assert!((check.tau_squared.re - want).abs() < 1e-9);
            assert!(check.tau_squared.im.abs() < 1e-9);
        }
    }

    #[test]
    fn twist_and_square_over_small_discriminants() {
        for d in fundamental_discriminants(60) {
            let chi = character_from_discriminant(d).unwrap();
            let q = chi.modulus();
            for k in 0..q as i64 {
                assert!(
                    gauss_twist_check(&chi, k).max_deviation <= 1e-8,
                    "d={d} k={k}"
                );
            }
            assert!(tau_square_check(&chi).deviation <= 1e-8, "d={d}");
        }
    }
}
