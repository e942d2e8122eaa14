//! Prime generation and everything summed over primes: a bit-packed
//! segmented sieve of Eratosthenes, the logarithmic integral
//! `li(x) = int_2^x du/log u`, exact prime counts in arithmetic
//! progressions, Goldbach representation counts `R(n)` over ordered prime
//! pairs, and the exponential sums `sum_{2<p<=x} e(kp/q)` accumulated from
//! residue-class counts.
//!
//! The sieve bitmap can be persisted: 64-byte header (magic `SLSV`,
//! version `u32`, limit `u64`, zero padding) followed by the table in
//! little-endian bit order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num::complex::Complex64;
use num::integer::gcd;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::FactoredInt;
use crate::characters::Character;
use crate::expsums::{e2pi, unit_root_table};
use crate::kahan::KahanComplex;
use crate::{Error, Result};

/// Default memory guard for sieve construction (bits).
pub const DEFAULT_SIEVE_GUARD: u64 = 1 << 34;

const CACHE_MAGIC: &[u8; 4] = b"SLSV";
const CACHE_VERSION: u32 = 1;
const CACHE_HEADER_LEN: usize = 64;

/// Bit-packed primality table over `[2, limit]`, immutable once built.
/// Bit `n` of the table is set exactly when `n` is prime.
pub struct PrimeSieve {
    limit: u64,
    words: Vec<u64>,
}

/// Builds a sieve with the default memory guard.
pub fn build_sieve(limit: u64) -> Result<PrimeSieve> {
    build_sieve_guarded(limit, DEFAULT_SIEVE_GUARD)
}

/// Builds a sieve, rejecting limits beyond `guard` bits. Segments are
/// disjoint word ranges marked in parallel, so the table is identical for
/// any thread count.
pub fn build_sieve_guarded(limit: u64, guard: u64) -> Result<PrimeSieve> {
    if limit < 2 {
        return Err(Error::invalid("build_sieve: limit must be >= 2"));
    }
    if limit > guard {
        return Err(Error::invalid(format!(
            "build_sieve: limit {limit} exceeds memory guard {guard}"
        )));
    }
    let root = (limit as f64).sqrt() as u64 + 1;
    let mut base_composite = vec![false; (root + 1) as usize];
    let mut base_primes = Vec::new();
    for p in 2..=root {
        if !base_composite[p as usize] {
            base_primes.push(p);
            let mut m = p * p;
            while m <= root {
                base_composite[m as usize] = true;
                m += p;
            }
        }
    }

    let n_words = ((limit + 1) as usize).div_ceil(64);
    let mut words = vec![!0u64; n_words];

    const SEGMENT_WORDS: usize = 1 << 14; // 2^20 integers per segment
    words
        .par_chunks_mut(SEGMENT_WORDS)
        .enumerate()
        .for_each(|(ci, chunk)| {
            let lo = (ci * SEGMENT_WORDS * 64) as u64;
            let hi = (lo + (chunk.len() * 64) as u64).min(limit + 1);
            for &p in &base_primes {
                let mut m = (lo.div_ceil(p) * p).max(p * p);
                while m < hi {
                    let idx = (m - lo) as usize;
                    chunk[idx / 64] &= !(1u64 << (idx % 64));
                    m += p;
                }
            }
        });

    let mut sieve = PrimeSieve { limit, words };
    sieve.clear_bit(0);
    sieve.clear_bit(1);
    // zero the slack past `limit` in the last word
    let last_bits = (limit + 1) % 64;
    if last_bits != 0 {
        let mask = (1u64 << last_bits) - 1;
        *sieve.words.last_mut().expect("nonempty") &= mask;
    }
    Ok(sieve)
}

impl PrimeSieve {
    fn clear_bit(&mut self, n: u64) {
        self.words[(n / 64) as usize] &= !(1u64 << (n % 64));
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primality query; `n` must not exceed the sieve limit.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        debug_assert!(n <= self.limit);
        (self.words[(n / 64) as usize] >> (n % 64)) & 1 == 1
    }

    /// Iterates the primes `<= bound` in increasing order.
    pub fn primes_to(&self, bound: u64) -> PrimeIter<'_> {
        PrimeIter {
            sieve: self,
            word_idx: 0,
            current: self.words[0],
            bound: bound.min(self.limit),
        }
    }

    pub fn count_primes_to(&self, bound: u64) -> u64 {
        self.primes_to(bound).count() as u64
    }

    /// Counts primes `exclude_below < p <= x` in each residue class mod `q`.
    pub fn residue_class_counts(&self, x: u64, q: u64, exclude_le: u64) -> Result<Vec<u64>> {
        if x > self.limit {
            return Err(Error::invalid(format!(
                "x = {x} exceeds sieve limit {}",
                self.limit
            )));
        }
        if q == 0 {
            return Err(Error::invalid("residue_class_counts: q must be >= 1"));
        }
        let mut counts = vec![0u64; q as usize];
        for p in self.primes_to(x) {
            if p > exclude_le {
                counts[(p % q) as usize] += 1;
            }
        }
        Ok(counts)
    }

    /// Writes the bitmap with its 64-byte header.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut header = [0u8; CACHE_HEADER_LEN];
        header[..4].copy_from_slice(CACHE_MAGIC);
        header[4..8].copy_from_slice(&CACHE_VERSION.to_le_bytes());
        header[8..16].copy_from_slice(&self.limit.to_le_bytes());
        let file = fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        w.write_all(&header)?;
        for word in &self.words {
            w.write_all(&word.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a persisted bitmap, validating magic, version and limit.
    pub fn load(path: &Path, expected_limit: u64) -> Result<PrimeSieve> {
        let mut file = fs::File::open(path)?;
        let mut header = [0u8; CACHE_HEADER_LEN];
        file.read_exact(&mut header)?;
        if &header[..4] != CACHE_MAGIC {
            return Err(Error::invalid("sieve cache: bad magic"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
        if version != CACHE_VERSION {
            return Err(Error::invalid(format!(
                "sieve cache: unsupported version {version}"
            )));
        }
        let limit = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
        if limit != expected_limit {
            return Err(Error::invalid(format!(
                "sieve cache: limit {limit} does not match requested {expected_limit}"
            )));
        }
        let n_words = ((limit + 1) as usize).div_ceil(64);
        let mut bytes = vec![0u8; n_words * 8];
        file.read_exact(&mut bytes)?;
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(PrimeSieve { limit, words })
    }
}

/// Word-skipping iterator over set bits.
pub struct PrimeIter<'a> {
    sieve: &'a PrimeSieve,
    word_idx: usize,
    current: u64,
    bound: u64,
}

impl Iterator for PrimeIter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as u64;
                let n = (self.word_idx as u64) * 64 + bit;
                if n > self.bound {
                    return None;
                }
                self.current &= self.current - 1;
                return Some(n);
            }
            self.word_idx += 1;
            if self.word_idx >= self.sieve.words.len() {
                return None;
            }
            self.current = self.sieve.words[self.word_idx];
        }
    }
}

/// `li(x) = int_2^x du / log u` by adaptive Simpson quadrature on the
/// substituted integrand `e^t / t`, relative tolerance `1e-12`.
pub fn li(x: f64) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::invalid(format!("li: x = {x} must be >= 2")));
    }
    if x == 2.0 {
        return Ok(0.0);
    }
    let f = |t: f64| t.exp() / t;
    let a = 2.0f64.ln();
    let b = x.ln();
    Ok(adaptive_simpson(&f, a, b, 1e-12))
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    let eps = rel_tol * whole.abs().max(1e-300);
    simpson_refine(f, a, fa, m, fm, b, fb, whole, eps, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_refine(f, a, fa, lm, flm, m, fm, left, eps / 2.0, depth - 1)
        + simpson_refine(f, m, fm, rm, frm, b, fb, right, eps / 2.0, depth - 1)
}

/// Exact count of primes `p <= x` with `p = a (mod q)`.
pub fn prime_count_ap(sieve: &PrimeSieve, x: u64, q: u64, a: i64) -> Result<u64> {
    if x > sieve.limit() {
        return Err(Error::invalid(format!(
            "prime_count_ap: x = {x} exceeds sieve limit {}",
            sieve.limit()
        )));
    }
    if q == 0 {
        return Err(Error::invalid("prime_count_ap: q must be >= 1"));
    }
    let a = a.rem_euclid(q as i64) as u64;
    Ok(sieve.primes_to(x).filter(|&p| p % q == a).count() as u64)
}

/// Exact prime count in one progression against its smooth main term
/// `li(x)/phi(q)` and the optional character secondary term
/// `chi(a) li(x^beta) / phi(q)`; `residual` makes the identity
/// `exact = main - secondary + residual` hold by construction.
#[derive(Debug, Clone, Serialize)]
pub struct ApCountReport {
    pub x: u64,
    pub q: u64,
    pub a: u64,
    pub exact_count: u64,
    pub main_term: f64,
    pub secondary_term: f64,
    pub residual: f64,
}

pub fn ap_count_report(
    sieve: &PrimeSieve,
    chi: &Character,
    x: u64,
    a: i64,
    beta: Option<f64>,
) -> Result<ApCountReport> {
    let q = chi.modulus();
    let a_red = a.rem_euclid(q as i64) as u64;
    if gcd(a_red, q) != 1 {
        return Err(Error::invalid(format!(
            "ap_count_report: requires gcd(a, q) = 1, got a = {a_red}, q = {q}"
        )));
    }
    if let Some(b) = beta {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::invalid(format!(
                "ap_count_report: beta = {b} must lie in (0, 1)"
            )));
        }
    }
    let exact = prime_count_ap(sieve, x, q, a)?;
    let phi = FactoredInt::factor(q)?.phi() as f64;
    let main_term = li(x as f64)? / phi;
    let secondary_term = match beta {
        Some(b) => {
            let xb = (x as f64).powf(b);
            if xb < 2.0 {
                return Err(Error::invalid(format!(
                    "ap_count_report: x^beta = {xb} < 2, li undefined"
                )));
            }
            chi.value(a) as f64 * li(xb)? / phi
        }
        None => 0.0,
    };
    Ok(ApCountReport {
        x,
        q,
        a: a_red,
        exact_count: exact,
        main_term,
        secondary_term,
        residual: exact as f64 - main_term + secondary_term,
    })
}

/// The progression counts of one character's modulus at a glance: the
/// worst relative deviation of `pi(x; q, a)` from `li(x)/phi(q)` over all
/// coprime residues `a`, with the worst class spelled out.
#[derive(Debug, Clone, Serialize)]
pub struct ApGateReport {
    pub x: u64,
    pub q: u64,
    pub classes_checked: u64,
    pub max_rel_deviation: f64,
    pub argmax_a: u64,
    pub worst: ApCountReport,
}

pub fn ap_count_gate(sieve: &PrimeSieve, chi: &Character, x: u64) -> Result<ApGateReport> {
    let q = chi.modulus();
    let counts = sieve.residue_class_counts(x, q, 0)?;
    let main_term = li(x as f64)? / FactoredInt::factor(q)?.phi() as f64;
    let mut max_rel = -1.0f64;
    let mut argmax_a = 0u64;
    let mut classes = 0u64;
    for a in 1..q {
        if gcd(a, q) != 1 {
            continue;
        }
        classes += 1;
        let rel = (counts[a as usize] as f64 - main_term).abs() / main_term;
        if rel > max_rel {
            max_rel = rel;
            argmax_a = a;
        }
    }
    if classes == 0 {
        return Err(Error::invalid("ap_count_gate: no coprime residues"));
    }
    let exact = counts[argmax_a as usize];
    Ok(ApGateReport {
        x,
        q,
        classes_checked: classes,
        max_rel_deviation: max_rel,
        argmax_a,
        worst: ApCountReport {
            x,
            q,
            a: argmax_a,
            exact_count: exact,
            main_term,
            secondary_term: 0.0,
            residual: exact as f64 - main_term,
        },
    })
}

/// `R(n)`: ordered pairs of primes summing to `n`. With `odd_only`, both
/// primes must exceed 2, matching the summation range of the exponential
/// sums; otherwise `p = 2` counts as in the plain definition. Both counts
/// are meaningful and callers report them side by side.
pub fn goldbach_r(sieve: &PrimeSieve, n: u64, odd_only: bool) -> Result<u64> {
    if n > sieve.limit() {
        return Err(Error::invalid(format!(
            "goldbach_r: n = {n} exceeds sieve limit {}",
            sieve.limit()
        )));
    }
    let min_p = if odd_only { 3 } else { 2 };
    if n < 2 * min_p {
        return Ok(0);
    }
    let mut count = 0u64;
    for p in primes_between(sieve, min_p, n - min_p) {
        if sieve.is_prime(n - p) {
            count += 1;
        }
    }
    Ok(count)
}

fn primes_between(sieve: &PrimeSieve, lo: u64, hi: u64) -> impl Iterator<Item = u64> + '_ {
    sieve.primes_to(hi).filter(move |&p| p >= lo)
}

/// `R(n)` for every `n <= x` at once, by bucketing ordered prime-pair sums.
/// Unordered pairs are enumerated once and counted twice (once when equal),
/// chunks merge by exact integer addition so the result is deterministic
/// under any parallel schedule.
pub fn goldbach_table(sieve: &PrimeSieve, x: u64, odd_only: bool) -> Result<Vec<u32>> {
    if x > sieve.limit() {
        return Err(Error::invalid(format!(
            "goldbach_table: x = {x} exceeds sieve limit {}",
            sieve.limit()
        )));
    }
    let min_p = if odd_only { 3u64 } else { 2 };
    let primes: Vec<u64> = sieve.primes_to(x).filter(|&p| p >= min_p).collect();
    let np = primes.len();
    // per-chunk bucket arrays cost (x+1)*4 bytes each; cap the total at ~2 GB
    let mem_cap = ((1u64 << 31) / (4 * (x + 1))).max(1) as usize;
    let n_chunks = (rayon::current_num_threads() * 4).clamp(1, mem_cap);
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut local = vec![0u32; (x + 1) as usize];
            let mut i = chunk;
            while i < np {
                let pi = primes[i];
                for &pj in &primes[i..] {
                    let s = pi + pj;
                    if s > x {
                        break;
                    }
                    local[s as usize] += if pi == pj { 1 } else { 2 };
                }
                i += n_chunks;
            }
            local
        })
        .reduce(
            || vec![0u32; (x + 1) as usize],
            |mut a, b| {
                for (ai, bi) in a.iter_mut().zip(b) {
                    *ai += bi;
                }
                a
            },
        );
    Ok(counts)
}

/// The table `A_k = sum_{2<p<=x} e(kp/q)` for `k = 0..q-1` at fixed
/// `(x, q)`. `A_0` is the real odd-prime count and `A_{q-k}` is the
/// conjugate of `A_k`.
#[derive(Debug, Clone)]
pub struct ExpSumTable {
    pub x: u64,
    pub q: u64,
    pub values: Vec<Complex64>,
}

impl ExpSumTable {
    /// `A_{k mod q}`, so the index convention `k = 1..q` works directly.
    pub fn value(&self, k: u64) -> Complex64 {
        self.values[(k % self.q) as usize]
    }
}

/// Builds the table from residue-class counts: one pass over the primes
/// accumulates `m_r = #{p = r (mod q)}`, then
/// `A_k = sum_r m_r e(kr/q)` costs `O(q^2)` with compensated summation.
/// The per-prime evaluation is [`prime_expsum_direct`]; it is kept as the
/// independent cross-check of this path.
pub fn prime_expsum_table(sieve: &PrimeSieve, x: u64, q: u64) -> Result<ExpSumTable> {
    let class_counts = sieve.residue_class_counts(x, q, 2)?;
    let roots = unit_root_table(q);
    let values: Vec<Complex64> = (0..q)
        .into_par_iter()
        .map(|k| {
            let mut acc = KahanComplex::new();
            for (r, &m) in class_counts.iter().enumerate() {
                if m != 0 {
                    let root = roots[((k * r as u64) % q) as usize];
                    acc.add(root * m as f64);
                }
            }
            acc.value()
        })
        .collect();
    Ok(ExpSumTable { x, q, values })
}

/// `A_k` accumulated prime by prime; the reference path for the
/// class-count table.
pub fn prime_expsum_direct(sieve: &PrimeSieve, x: u64, q: u64, k: u64) -> Result<Complex64> {
    if x > sieve.limit() {
        return Err(Error::invalid(format!(
            "prime_expsum_direct: x = {x} exceeds sieve limit {}",
            sieve.limit()
        )));
    }
    if q == 0 {
        return Err(Error::invalid("prime_expsum_direct: q must be >= 1"));
    }
    let mut acc = KahanComplex::new();
    for p in sieve.primes_to(x) {
        if p > 2 {
            acc.add(e2pi((k % q) as f64 * (p % q) as f64 / q as f64));
        }
    }
    Ok(acc.value())
}
