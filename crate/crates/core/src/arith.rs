//! Exact elementary arithmetic: factorization by trial division, the Euler
//! totient and Moebius functions, the totient-ratio sandwich
//! `n/phi(n) >= sum_{d|n} mu^2(d)/d >= (6/pi^2) * n/phi(n)`, and the
//! squarefree divisor sum `sum_{r|q} mu^2(r)/phi(r)` which collapses to
//! `q/phi(q)` exactly.
//!
//! Everything here is exact: counts are `u64`, ratios are arbitrary-size
//! rationals, so identity checks never round.

use std::sync::OnceLock;

use num::rational::BigRational;
use num::{BigInt, One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact rational with arbitrary-size integers, always in lowest terms
/// with a positive denominator (maintained by the backing type).
pub type Rational = BigRational;

/// Builds the rational `n / d` from unsigned parts.
pub fn rational(n: u64, d: u64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

const TRIAL_TABLE_LIMIT: u64 = 1 << 16;

fn small_primes() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = TRIAL_TABLE_LIMIT as usize;
        let mut composite = vec![false; n + 1];
        let mut primes = Vec::new();
        for p in 2..=n {
            if !composite[p] {
                primes.push(p as u64);
                let mut m = p * p;
                while m <= n {
                    composite[m] = true;
                    m += p;
                }
            }
        }
        primes
    })
}

/// A positive integer together with its prime factorization,
/// primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInt {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl FactoredInt {
    /// Factors `n >= 1` by trial division over a small-prime table,
    /// falling back to odd step division past the table.
    pub fn factor(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("factor: n must be >= 1"));
        }
        let mut rest = n;
        let mut factors = Vec::new();
        for &p in small_primes() {
            if p * p > rest {
                break;
            }
            if rest % p == 0 {
                let mut e = 0u32;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
        }
        if rest >= TRIAL_TABLE_LIMIT * TRIAL_TABLE_LIMIT {
            let mut d = TRIAL_TABLE_LIMIT + 1;
            while d * d <= rest {
                if rest % d == 0 {
                    let mut e = 0u32;
                    while rest % d == 0 {
                        rest /= d;
                        e += 1;
                    }
                    factors.push((d, e));
                }
                d += 2;
            }
        }
        if rest > 1 {
            factors.push((rest, 1));
        }
        debug_assert_eq!(
            factors
                .iter()
                .map(|&(p, e)| p.pow(e))
                .product::<u64>(),
            n
        );
        Ok(FactoredInt { value: n, factors })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn distinct_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// `phi(p^e) = p^e - p^(e-1)` multiplied over the factorization.
    pub fn phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| p.pow(e) - p.pow(e - 1))
            .product()
    }

    /// 0 for squareful numbers, else `(-1)^omega(n)`.
    pub fn moebius(&self) -> i64 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// All squarefree divisors (products of subsets of distinct primes).
    pub fn squarefree_divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, _) in &self.factors {
            let len = divs.len();
            for i in 0..len {
                divs.push(divs[i] * p);
            }
        }
        divs
    }

    /// All divisors, unsorted.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pe = 1u64;
            for _ in 0..e {
                pe *= p;
                for i in 0..len {
                    divs.push(divs[i] * pe);
                }
            }
        }
        divs
    }
}

/// Euler totient: the number of `1 <= a <= n` coprime to `n`.
pub fn euler_phi(n: u64) -> Result<u64> {
    Ok(FactoredInt::factor(n)?.phi())
}

/// Moebius function in `{-1, 0, 1}`.
pub fn moebius(n: u64) -> Result<i64> {
    Ok(FactoredInt::factor(n)?.moebius())
}

/// `q/phi(q)` as an exact rational.
pub fn q_over_phi(q: u64) -> Result<Rational> {
    let f = FactoredInt::factor(q)?;
    Ok(rational(q, f.phi()))
}

/// The sandwich `n/phi(n) >= sum_{d|n} mu^2(d)/d >= (6/pi^2) * n/phi(n)`.
///
/// Returns `(upper, mid, lower)` where the first two are exact rationals
/// and the `6/pi^2` side is floating point. The orderings are checked here:
/// the exact pair exactly, the float side within `1e-12`.
pub fn totient_ratio_sandwich(n: u64) -> Result<(Rational, Rational, f64)> {
    let f = FactoredInt::factor(n)?;
    let upper = rational(n, f.phi());
    let mut mid = BigRational::zero();
    for d in f.squarefree_divisors() {
        mid += rational(1, d);
    }
    let lower = (6.0 / (std::f64::consts::PI * std::f64::consts::PI))
        * upper.to_f64().expect("ratio fits in f64");
    if upper < mid {
        return Err(Error::invariant(
            "totient_sandwich_upper",
            format!("n={n}: n/phi(n)={upper} < divisor sum {mid}"),
        ));
    }
    let mid_f = mid.to_f64().expect("divisor sum fits in f64");
    if mid_f < lower - 1e-12 {
        return Err(Error::invariant(
            "totient_sandwich_lower",
            format!("n={n}: divisor sum {mid_f} < (6/pi^2)*n/phi(n) = {lower}"),
        ));
    }
    Ok((upper, mid, lower))
}

/// `sum_{r|q} mu^2(r)/phi(r)`, exactly. Equals `q/phi(q)` as a rational;
/// callers verify that identity rather than this function assuming it.
pub fn mu2_over_phi_divisor_sum(q: u64) -> Result<Rational> {
    let f = FactoredInt::factor(q)?;
    let mut sum = BigRational::zero();
    for r in f.squarefree_divisors() {
        sum += rational(1, FactoredInt::factor(r)?.phi());
    }
    Ok(sum)
}

/// The same divisor sum in its k-grouped form
/// `sum_{k=1..q} mu^2(q/(q,k)) / phi^2(q/(q,k))`, exactly.
pub fn mu2_over_phi_kgrouped(q: u64) -> Result<Rational> {
    if q == 0 {
        return Err(Error::invalid("mu2_over_phi_kgrouped: q must be >= 1"));
    }
    let mut sum = BigRational::zero();
    for k in 1..=q {
        let m = q / num::integer::gcd(q, k);
        let fm = FactoredInt::factor(m)?;
        if fm.is_squarefree() {
            let phi = fm.phi();
            sum += BigRational::new(BigInt::one(), BigInt::from(phi) * BigInt::from(phi));
        }
    }
    Ok(sum)
}

/// True iff `d` is a fundamental discriminant: `d = 1 (mod 4)` squarefree
/// and `d != 1`, or `d = 4m` with `m = 2, 3 (mod 4)` squarefree. These are
/// exactly the discriminants indexing real primitive characters of
/// modulus `|d| >= 3`; note `d = 1` (the trivial character) is excluded.
pub fn is_fundamental_discriminant(d: i64) -> Result<bool> {
    if d == 0 {
        return Err(Error::invalid("is_fundamental_discriminant: d must be nonzero"));
    }
    if d == 1 {
        return Ok(false);
    }
    if d.rem_euclid(4) == 1 {
        return Ok(FactoredInt::factor(d.unsigned_abs())?.is_squarefree());
    }
    if d % 4 == 0 {
        let m = d / 4;
        let r = m.rem_euclid(4);
        if r == 2 || r == 3 {
            return Ok(FactoredInt::factor(m.unsigned_abs())?.is_squarefree());
        }
    }
    Ok(false)
}

/// All fundamental discriminants with `3 <= |d| <= bound`, ascending in `|d|`
/// with the negative one first at each absolute value.
pub fn fundamental_discriminants(bound: u64) -> Vec<i64> {
    let mut out = Vec::new();
    for a in 3..=bound as i64 {
        for d in [-a, a] {
            if is_fundamental_discriminant(d).expect("nonzero") {
                out.push(d);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi_brute(n: u64) -> u64 {
        (1..=n).filter(|&a| num::integer::gcd(a, n) == 1).count() as u64
    }

    #[test]
    fn phi_examples() {
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(euler_phi(12).unwrap(), phi_brute(12));
        assert_eq!(euler_phi(12).unwrap(), 4);
        assert_eq!(euler_phi(97).unwrap(), 96);
        assert!(euler_phi(0).is_err());
    }

    #[test]
    fn moebius_examples() {
        assert_eq!(moebius(1).unwrap(), 1);
        assert_eq!(moebius(6).unwrap(), 1);
        assert_eq!(moebius(12).unwrap(), 0);
        assert!(moebius(0).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let (upper, mid, lower) = totient_ratio_sandwich(1).unwrap();
        assert_eq!(upper, rational(1, 1));
        assert_eq!(mid, rational(1, 1));
        assert!((lower - 0.6079271018540267).abs() < 1e-12);

        let (upper, mid, lower) = totient_ratio_sandwich(6).unwrap();
        assert_eq!(upper, rational(3, 1));
        assert_eq!(mid, rational(2, 1));
        assert!((lower - 3.0 * 0.6079271018540267).abs() < 1e-12);

        let (upper, mid, _) = totient_ratio_sandwich(2).unwrap();
        assert_eq!(upper, rational(2, 1));
        assert_eq!(mid, rational(3, 2));
    }

    #[test]
    fn divisor_sum_examples() {
        assert_eq!(mu2_over_phi_divisor_sum(1).unwrap(), rational(1, 1));
        assert_eq!(mu2_over_phi_divisor_sum(12).unwrap(), rational(3, 1));
        assert_eq!(mu2_over_phi_divisor_sum(9).unwrap(), rational(3, 2));
    }

    #[test]
    fn divisor_sum_equals_q_over_phi_smoke() {
        for q in 1..=2000 {
            assert_eq!(
                mu2_over_phi_divisor_sum(q).unwrap(),
                q_over_phi(q).unwrap(),
                "q={q}"
            );
        }
    }

    #[test]
    fn kgrouped_matches_divisor_sum() {
        // Both sides are 3 at q = 12; check a range exactly.
        assert_eq!(mu2_over_phi_kgrouped(12).unwrap(), rational(3, 1));
        for q in 1..=200 {
            assert_eq!(
                mu2_over_phi_kgrouped(q).unwrap(),
                mu2_over_phi_divisor_sum(q).unwrap(),
                "q={q}"
            );
        }
    }

    #[test]
    fn fundamental_discriminant_examples() {
        assert!(is_fundamental_discriminant(-4).unwrap());
        assert!(is_fundamental_discriminant(5).unwrap());
        assert!(!is_fundamental_discriminant(-9).unwrap());
        assert!(!is_fundamental_discriminant(1).unwrap());
        assert!(!is_fundamental_discriminant(-1).unwrap());
        assert!(!is_fundamental_discriminant(20).unwrap());
        assert!(is_fundamental_discriminant(-20).unwrap());
        assert!(is_fundamental_discriminant(8).unwrap());
        assert!(is_fundamental_discriminant(-8).unwrap());
        assert!(is_fundamental_discriminant(12).unwrap());
        assert!(is_fundamental_discriminant(0).is_err());
    }

    #[test]
    fn multiplicativity_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
        let mut checked = 0;
        while checked < 1000 {
            let m = rng.gen_range(1..=10_000u64);
            let n = rng.gen_range(1..=10_000u64);
            if num::integer::gcd(m, n) != 1 {
                continue;
            }
            assert_eq!(
                euler_phi(m * n).unwrap(),
                euler_phi(m).unwrap() * euler_phi(n).unwrap()
            );
            assert_eq!(
                moebius(m * n).unwrap(),
                moebius(m).unwrap() * moebius(n).unwrap()
            );
            checked += 1;
        }
    }

    #[test]
    fn factor_large_prime_tail() {
        // A value whose cofactor after the table exceeds the table limit.
        let p = 4_294_967_291u64; // largest prime below 2^32
        let f = FactoredInt::factor(2 * p).unwrap();
        assert_eq!(f.factors(), &[(2, 1), (p, 1)]);
    }
}
