//! Integer side: primality, factorization of q^m − 1, ω, W, φ, Q_e and C_r.

pub mod cache;
pub mod factor;
pub mod mont;
pub mod primes;
pub mod rho;

use num_bigint::BigUint;
use thiserror::Error;

pub use factor::{
    compute_qe, cyclotomic_coeffs, cyclotomic_value, divisors_u64, factor_q_pow_m_minus_1, factor_u64,
    factorize, factorize_complete, mobius, FactorBudget, IntFactorization, Residue,
};
pub use primes::{is_prime_big, is_prime_u128, is_prime_u64, prime_powers_in, small_primes};

use crate::hp::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("factorization of {0} did not finish within budget")]
    FactorizationTimeout(String),
    #[error("factorization of {0} is partial")]
    PartialFactorization(String),
    #[error("{0} is not prime")]
    NotPrime(String),
}

/// Which primes enter the constant C_r.
#[derive(Clone, Copy, Debug)]
pub enum CrMode<'a> {
    /// All primes up to 2^r.
    WorstCase,
    /// Primes up to 2^r that divide the given number.
    Exact(&'a IntFactorization),
}

/// C_r = 2^w / (p_1⋯p_w)^{1/r} over the primes p_i ≤ 2^r selected by `mode`.
pub fn c_r_constant(r: &Real, mode: CrMode<'_>) -> Real {
    let two = Real::from_u64(2);
    let limit = two.pow(r);
    let limit_f = limit.to_f64();
    let ln2 = two.ln();
    let mut ln_prod = Real::from_u64(0);
    let mut w = 0u64;
    let mut take = |p: &BigUint| {
        let pr = Real::from_biguint(p);
        if pr <= limit {
            ln_prod = ln_prod.add(&pr.ln());
            w += 1;
        }
    };
    match mode {
        CrMode::WorstCase => {
            let bound = limit_f.floor() as u64;
            assert!(bound < primes::SMALL_PRIME_LIMIT as u64, "2^r beyond the prime table");
            for &p in small_primes() {
                if p as u64 > bound {
                    break;
                }
                take(&BigUint::from(p));
            }
        }
        CrMode::Exact(n) => {
            for p in n.primes() {
                take(p);
            }
        }
    }
    Real::from_u64(w).mul(&ln2).sub(&ln_prod.div(r)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c3_near_published_constant() {
        let c = c_r_constant(&Real::from_u64(3), CrMode::WorstCase);
        // primes 2,3,5,7: 16 / 210^{1/3}
        assert!((c.to_f64() - 16.0 / 210f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(c.sci(2), "2.7e0");
    }

    #[test]
    fn c_r_empty_product() {
        let c = c_r_constant(&Real::parse("0.5").unwrap(), CrMode::WorstCase);
        assert_eq!(c, Real::from_u64(1));
    }
}
