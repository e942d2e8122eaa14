//! Exact and floating-point number-theory kernels for verifying classical
//! identities around real primitive Dirichlet characters: totient and
//! Moebius arithmetic, Kronecker-symbol characters, Ramanujan and Gauss
//! sums, prime sieves, Goldbach representation counts, exponential sums
//! over primes, and real-axis Dirichlet L-function evaluation with
//! rigorous error bounds.
//!
//! All heavy loops are deterministic: parallel paths either produce exact
//! integers (order-independent) or collect per-index results in a fixed
//! order, so output bytes do not depend on the thread count.

pub mod arith;
pub mod characters;
pub mod experiment;
pub mod expsums;
pub mod kahan;
pub mod lfunc;
pub mod primes;

use thiserror::Error;

/// Errors raised by the library: rejected inputs vs. violated internal
/// invariants. Invariant violations indicate a bug or a numerical
/// breakdown and map to a distinct process exit code in the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invariant `{name}` violated: {detail}")]
    InvariantViolation { name: String, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn invariant(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InvariantViolation {
            name: name.into(),
            detail: detail.into(),
        }
    }
}

pub use arith::{
    euler_phi, is_fundamental_discriminant, moebius, mu2_over_phi_divisor_sum,
    mu2_over_phi_kgrouped, totient_ratio_sandwich, FactoredInt, Rational,
};
pub use characters::{character_from_discriminant, is_primitive_brute, kronecker, Character};
pub use experiment::{
    choose_x, conjecture_scan, conjecture_scan_points, decomposition_report, s_counting, s_direct,
    s_identity_report, theorem_bound_report, ConjectureKind, ConjecturePoint, ConjectureReport,
    ConstantsConfig, SReport, TheoremBoundReport, XChoice,
};
pub use expsums::{
    gauss_sum, gauss_twist_check, ramanujan_brute, ramanujan_closed, ramanujan_profile,
    tau_square_check, ComplexValue, GaussTwistCheck, RamanujanProfile, TauSquareCheck,
};
pub use lfunc::{
    l_value, l_value_hurwitz, l_value_with_terms, real_zero_scan, real_zero_scan_detailed,
    siegel_margin, LSeriesEval, ShapeComparison, SiegelMarginReport, ZeroScanReport,
};
pub use primes::{
    ap_count_gate, ap_count_report, build_sieve, build_sieve_guarded, goldbach_r, goldbach_table,
    li, prime_count_ap, prime_expsum_direct, prime_expsum_table, ApCountReport, ApGateReport,
    ExpSumTable, PrimeSieve, DEFAULT_SIEVE_GUARD,
};
