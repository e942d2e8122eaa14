//! Cross-module invariants: discriminants against primitivity, the
//! exponential-sum table against its per-prime path, and randomized
//! structure properties.

use num::complex::Complex64;
use proptest::prelude::*;
use siegellab_core::arith::fundamental_discriminants;
use siegellab_core::{
    build_sieve, character_from_discriminant, goldbach_r, goldbach_table, is_primitive_brute,
    kronecker, prime_expsum_table, ramanujan_closed, real_zero_scan_detailed, s_counting,
    s_direct,
};

#[test]
fn fundamental_discriminants_yield_primitive_characters() {
    let ds = fundamental_discriminants(400);
    assert!(ds.contains(&-163) && ds.contains(&-4) && ds.contains(&5) && ds.contains(&12));
    for d in ds {
        let chi = character_from_discriminant(d).unwrap();
        assert!(
            is_primitive_brute(&chi).unwrap(),
            "character of d={d} is imprimitive"
        );
    }
}

#[test]
fn expsum_conjugate_symmetry_with_random_parameters() {
    use rand::{Rng, SeedableRng};
    let sieve = build_sieve(20_000).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(99);
    for _ in 0..20 {
        let x = rng.gen_range(100..=20_000u64);
        let q = rng.gen_range(1..=200u64);
        let table = prime_expsum_table(&sieve, x, q).unwrap();
        let odd_count = table.values[0];
        assert!(odd_count.im == 0.0 && odd_count.re.fract() == 0.0);
        let expect = sieve.primes_to(x).filter(|&p| p > 2).count() as f64;
        assert_eq!(odd_count.re, expect, "x={x} q={q}");
        for k in 1..q {
            let diff: Complex64 = table.value(k) - table.value(q - k).conj();
            assert!(diff.norm() < 1e-9, "x={x} q={q} k={k}");
        }
    }
}

#[test]
fn s_identity_on_random_grid() {
    use rand::{Rng, SeedableRng};
    let sieve = build_sieve(30_000).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for _ in 0..15 {
        let x = rng.gen_range(50..=30_000u64);
        let q = rng.gen_range(1..=80u64);
        let table = prime_expsum_table(&sieve, x, q).unwrap();
        let sd = s_direct(&table).unwrap();
        let sc = s_counting(&sieve, x, q).unwrap();
        assert!(sc % q == 0);
        assert!(
            (sd - sc as f64).abs() <= 1e-6 * (sc as f64).max(1.0),
            "x={x} q={q}: {sd} vs {sc}"
        );
    }
}

#[test]
fn goldbach_table_total_matches_pair_double_count() {
    // sum_n R(n) over n <= x equals the number of ordered prime pairs
    // with sum <= x; spot-check against the single-n counter.
    let sieve = build_sieve(5000).unwrap();
    let table = goldbach_table(&sieve, 5000, false).unwrap();
    for n in [4u64, 128, 1000, 4998] {
        assert_eq!(table[n as usize] as u64, goldbach_r(&sieve, n, false).unwrap());
    }
}

#[test]
fn l_values_continuous_on_scan_grid() {
    // successive grid values stay within 10 * step * (local slope estimate)
    let step = 0.01;
    for d in [-4i64, -3, 5, 12, -163, 120] {
        let chi = character_from_discriminant(d).unwrap();
        let (_, evals) = real_zero_scan_detailed(&chi, 0.01, 1.0, step).unwrap();
        let v: Vec<f64> = evals.iter().map(|e| e.value).collect();
        for i in 1..v.len() - 1 {
            let jump = (v[i + 1] - v[i]).abs();
            let local_slope = ((v[i] - v[i - 1]).abs() / step).max(0.05);
            assert!(
                jump < 10.0 * step * local_slope,
                "d={d}: jump {jump} at grid index {i} vs local slope {local_slope}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kronecker_completely_multiplicative_in_n(
        d in prop_oneof![-400i64..=-3, 3i64..=400],
        a in -300i64..300,
        b in -300i64..300,
    ) {
        prop_assume!(siegellab_core::is_fundamental_discriminant(d).unwrap());
        let left = kronecker(d, a * b).unwrap();
        let right = kronecker(d, a).unwrap() * kronecker(d, b).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn ramanujan_depends_only_on_gcd(q in 1u64..=400, n in -2000i64..2000) {
        let g = num::integer::gcd(q, n.unsigned_abs() % q);
        let g = if g == 0 { q } else { g };
        prop_assert_eq!(
            ramanujan_closed(q, n).unwrap(),
            ramanujan_closed(q, g as i64).unwrap()
        );
    }

    #[test]
    fn character_values_real_and_periodic(
        d in prop_oneof![-400i64..=-3, 3i64..=400],
        a in -5000i64..5000,
    ) {
        prop_assume!(siegellab_core::is_fundamental_discriminant(d).unwrap());
        let chi = character_from_discriminant(d).unwrap();
        let v = chi.value(a);
        prop_assert!(v == -1 || v == 0 || v == 1);
        prop_assert_eq!(v, chi.value(a + chi.modulus() as i64));
    }
}

#[test]
fn conjecture_scan_minima_frozen_oracle() {
    // Cross-checked against an independent sieve + pair-count implementation
    // (FFT convolution for the full table, per-n brute force at the minima).
    use siegellab_core::{conjecture_scan, ConjectureKind, ConstantsConfig};
    let sieve = build_sieve(1_000_000).unwrap();
    let config = ConstantsConfig::default();

    let c1 = conjecture_scan(&sieve, ConjectureKind::C1, 1_000_000, 1, &config).unwrap();
    assert_eq!(c1.argmin_n, 4);
    assert!((c1.min_ratio - 0.4804530139182014).abs() < 1e-12);

    let c3a = conjecture_scan(&sieve, ConjectureKind::C3, 100_000, 101, &config).unwrap();
    assert_eq!(c3a.argmin_n, 87_062); // R = 1026, phi = 43000
    assert!((c3a.min_ratio - 0.7530324336086355).abs() < 1e-12);

    let c3b = conjecture_scan(&sieve, ConjectureKind::C3, 100_000, 120, &config).unwrap();
    assert_eq!(c3b.argmin_n, 80_760); // R = 2624
    assert!((c3b.min_ratio - 1.1045584518019302).abs() < 1e-12);
}
