//! Real primitive Dirichlet characters mod `q`, realized as Kronecker
//! symbols `(d/n)` of fundamental discriminants `d` with `q = |d|`.
//!
//! The symbol is computed by the standard reciprocity reduction (powers of
//! two and sign handled separately) so `n` is never factored. Character
//! values are cached in a lazily built table of length `q` for moduli up
//! to [`TABLE_LIMIT`]; beyond that they are recomputed per call.

use std::sync::OnceLock;

use serde::Serialize;

use crate::arith::is_fundamental_discriminant;
use crate::{Error, Result};

/// Largest modulus for which a full value table is cached.
pub const TABLE_LIMIT: u64 = 1 << 20;

/// Largest modulus accepted by the exhaustive primitivity check.
pub const PRIMITIVITY_CHECK_LIMIT: u64 = 10_000;

/// Kronecker symbol `(d/n)`, total in `n` for `d != 0`.
pub fn kronecker(d: i64, n: i64) -> Result<i64> {
    if d == 0 {
        return Err(Error::invalid("kronecker: d must be nonzero"));
    }
    if d == i64::MIN || n == i64::MIN {
        return Err(Error::invalid("kronecker: |argument| out of range"));
    }
    Ok(kronecker_raw(d, n))
}

fn kronecker_raw(a: i64, n: i64) -> i64 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut result = 1i64;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let tz = n.trailing_zeros();
    if tz > 0 {
        if a & 1 == 0 {
            return 0;
        }
        if tz & 1 == 1 {
            // (a/2) = -1 exactly for a = 3, 5 (mod 8)
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        n >>= tz;
    }
    // Jacobi-style loop: n odd positive, a reduced nonnegative.
    let mut a = a.rem_euclid(n);
    while a != 0 {
        let tz = a.trailing_zeros();
        if tz & 1 == 1 {
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        a >>= tz;
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// A real primitive character mod `q = |d|`, `d` a fundamental
/// discriminant. Values are totally multiplicative, periodic mod `q`,
/// zero exactly on residues sharing a factor with `q`, and the parity
/// `chi(-1)` is `+1` for `d > 0` and `-1` for `d < 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Character {
    discriminant: i64,
    modulus: u64,
    parity: i64,
    #[serde(skip)]
    table: OnceLock<Vec<i8>>,
}

/// Builds the character attached to a fundamental discriminant.
pub fn character_from_discriminant(d: i64) -> Result<Character> {
    if !is_fundamental_discriminant(d)? {
        return Err(Error::invalid(format!(
            "d = {d} is not a fundamental discriminant \
             (need d = 1 mod 4 squarefree and d != 1, or d = 4m with m = 2,3 mod 4 squarefree)"
        )));
    }
    let parity = kronecker_raw(d, -1);
    debug_assert_eq!(parity, if d > 0 { 1 } else { -1 });
    Ok(Character {
        discriminant: d,
        modulus: d.unsigned_abs(),
        parity,
        table: OnceLock::new(),
    })
}

impl Character {
    pub fn discriminant(&self) -> i64 {
        self.discriminant
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `chi(-1)`.
    pub fn parity(&self) -> i64 {
        self.parity
    }

    /// `chi(n)` in `{-1, 0, 1}`.
    pub fn value(&self, n: i64) -> i64 {
        if self.modulus <= TABLE_LIMIT {
            let table = self.values_table();
            table[n.rem_euclid(self.modulus as i64) as usize] as i64
        } else {
            kronecker_raw(self.discriminant, n)
        }
    }

    /// The cached table `[chi(0), ..., chi(q-1)]`, built once.
    pub fn values_table(&self) -> &[i8] {
        self.table.get_or_init(|| {
            (0..self.modulus)
                .map(|a| kronecker_raw(self.discriminant, a as i64) as i8)
                .collect()
        })
    }
}

/// Exhaustive primitivity check: `chi` is imprimitive iff some proper
/// divisor `q' | q` has `chi(a) = chi(b)` whenever `a = b (mod q')` and
/// `gcd(ab, q) = 1`. Checked by bucketing coprime residues by their
/// class mod `q'`.
pub fn is_primitive_brute(chi: &Character) -> Result<bool> {
    let q = chi.modulus;
    if q > PRIMITIVITY_CHECK_LIMIT {
        return Err(Error::invalid(format!(
            "is_primitive_brute: modulus {q} exceeds exhaustive-check limit {PRIMITIVITY_CHECK_LIMIT}"
        )));
    }
    Ok(is_primitive_table(q, |a| chi.value(a as i64)))
}

/// Table-level version of the primitivity check, usable on raw value maps
/// (e.g. a character read at an inflated modulus).
pub fn is_primitive_table(q: u64, value_at: impl Fn(u64) -> i64) -> bool {
    for qp in 1..q {
        if q % qp != 0 {
            continue;
        }
        let mut class_value: Vec<Option<i64>> = vec![None; qp as usize];
        let mut induced = true;
        for a in 1..=q {
            if num::integer::gcd(a, q) != 1 {
                continue;
            }
            let v = value_at(a % q);
            let r = (a % qp) as usize;
            match class_value[r] {
                None => class_value[r] = Some(v),
                Some(w) if w != v => {
                    induced = false;
                    break;
                }
                Some(_) => {}
            }
        }
        if induced {
            return false;
        }
    }
    true
}
