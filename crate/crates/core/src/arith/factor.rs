use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::primes::{cyclotomic_candidates, is_prime_big, is_prime_u64, small_primes};
use super::rho::{rho_big, rho_u128};
use super::ArithError;
use crate::util::dec;

/// An unfactored part of n whose prime divisors are all at least `floor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Residue {
    #[serde(with = "dec")]
    pub value: BigUint,
    pub floor: u64,
}

impl Residue {
    /// ω(value) ≤ ⌊log value / log floor⌋.
    pub fn max_prime_count(&self) -> u32 {
        let bits = self.value.bits() as f64;
        let fl = (self.floor.max(2) as f64).log2();
        // value < 2^bits, so log2(value) < bits; subtract a hair for the strict bound
        let c = ((bits - 1e-9) / fl).floor() as u32;
        c.max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntFactorization {
    #[serde(with = "dec")]
    pub n: BigUint,
    #[serde(with = "dec::pairs")]
    pub factors: Vec<(BigUint, u32)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residues: Vec<Residue>,
}

impl IntFactorization {
    pub fn one() -> Self {
        IntFactorization { n: BigUint::one(), factors: Vec::new(), residues: Vec::new() }
    }

    /// Builds a complete factorization from prime powers, checking each prime.
    pub fn from_prime_powers(pairs: Vec<(BigUint, u32)>) -> Result<Self, ArithError> {
        let mut map: BTreeMap<BigUint, u32> = BTreeMap::new();
        for (p, e) in pairs {
            if !is_prime_big(&p) {
                return Err(ArithError::NotPrime(p.to_string()));
            }
            if e > 0 {
                *map.entry(p).or_default() += e;
            }
        }
        let mut n = BigUint::one();
        for (p, e) in &map {
            n *= p.pow(*e);
        }
        Ok(IntFactorization { n, factors: map.into_iter().collect(), residues: Vec::new() })
    }

    pub fn from_u64_pairs(pairs: &[(u64, u32)]) -> Self {
        let mut n = BigUint::one();
        let mut factors = Vec::with_capacity(pairs.len());
        for &(p, e) in pairs {
            n *= BigUint::from(p).pow(e);
            factors.push((BigUint::from(p), e));
        }
        factors.sort();
        IntFactorization { n, factors, residues: Vec::new() }
    }

    pub fn is_complete(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }

    /// ω(n) when fully factored.
    pub fn omega(&self) -> Option<usize> {
        self.is_complete().then_some(self.factors.len())
    }

    /// Certified upper bound on ω(n), exact when complete.
    pub fn omega_upper(&self) -> usize {
        self.factors.len() + self.residues.iter().map(|r| r.max_prime_count() as usize).sum::<usize>()
    }

    pub fn w_int(&self) -> Option<BigUint> {
        self.omega().map(|w| BigUint::one() << w)
    }

    pub fn euler_phi(&self) -> Option<BigUint> {
        if !self.is_complete() {
            return None;
        }
        let mut phi = BigUint::one();
        for (p, e) in &self.factors {
            phi *= p.pow(e - 1) * (p - 1u32);
        }
        Some(phi)
    }

    pub fn reconstructs(&self) -> bool {
        let mut prod = BigUint::one();
        for (p, e) in &self.factors {
            prod *= p.pow(*e);
        }
        for r in &self.residues {
            prod *= &r.value;
        }
        prod == self.n
    }

    pub fn require_complete(&self) -> Result<(), ArithError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(ArithError::PartialFactorization(self.n.to_string()))
        }
    }

    /// All divisors of n (complete factorizations only), ascending.
    pub fn divisors(&self) -> Result<Vec<BigUint>, ArithError> {
        self.require_complete()?;
        let mut out = vec![BigUint::one()];
        for (p, e) in &self.factors {
            let len = out.len();
            let mut pk = BigUint::one();
            for _ in 0..*e {
                pk *= p;
                for i in 0..len {
                    out.push(&out[i] * &pk);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// The factorization of a divisor given by an exponent vector.
    pub fn sub(&self, exps: &[u32]) -> IntFactorization {
        let mut n = BigUint::one();
        let mut factors = Vec::new();
        for ((p, _), &e) in self.factors.iter().zip(exps) {
            if e > 0 {
                n *= p.pow(e);
                factors.push((p.clone(), e));
            }
        }
        IntFactorization { n, factors, residues: Vec::new() }
    }

    /// Factorization of gcd(self, d) for an integer d.
    pub fn restrict_to_divisor_of(&self, d: &BigUint) -> IntFactorization {
        let mut n = BigUint::one();
        let mut factors = Vec::new();
        for (p, e) in &self.factors {
            let mut k = 0;
            let mut rem = d.clone();
            while k < *e && (&rem % p).is_zero() {
                rem /= p;
                k += 1;
            }
            if k > 0 {
                n *= p.pow(k);
                factors.push((p.clone(), k));
            }
        }
        IntFactorization { n, factors, residues: Vec::new() }
    }

    /// Merge two factorizations of coprime-or-not numbers into the factorization of the product.
    pub fn product(parts: &[IntFactorization]) -> IntFactorization {
        let mut map: BTreeMap<BigUint, u32> = BTreeMap::new();
        let mut n = BigUint::one();
        let mut residues = Vec::new();
        for part in parts {
            n *= &part.n;
            for (p, e) in &part.factors {
                *map.entry(p.clone()).or_default() += e;
            }
            residues.extend(part.residues.iter().cloned());
        }
        IntFactorization { n, factors: map.into_iter().collect(), residues }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorBudget {
    pub trial_limit: u64,
    /// Total rho iterations per number before giving up.
    pub rho_steps: u64,
}

impl Default for FactorBudget {
    fn default() -> Self {
        FactorBudget { trial_limit: 1_000_000, rho_steps: 1 << 30 }
    }
}

/// Complete factorization of a u64 by trial division and rho; never fails.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    for &p in small_primes().iter().take(168) {
        let p = p as u64;
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut found: Vec<u64> = Vec::new();
        while let Some(c) = stack.pop() {
            if c < 1_000_000 || is_prime_u64(c) {
                // below 1000^2 after removing primes < 1000 the cofactor is prime
                found.push(c);
                continue;
            }
            let mut budget = u64::MAX;
            let f = rho_u128(c as u128, &mut budget).expect("unbounded rho") as u64;
            stack.push(f);
            stack.push(c / f);
        }
        found.sort_unstable();
        for p in found {
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
    }
    out.sort_unstable();
    out
}

pub(crate) fn finish_cofactor(
    value: BigUint,
    floor: u64,
    budget: &FactorBudget,
    refine: bool,
    found: &mut BTreeMap<BigUint, u32>,
    residues: &mut Vec<Residue>,
) {
    if value.is_one() {
        return;
    }
    let floor_sq = BigUint::from(floor) * floor;
    if value < floor_sq {
        *found.entry(value).or_default() += 1;
        return;
    }
    if !refine {
        residues.push(Residue { value, floor });
        return;
    }
    if let Some(fs) = super::cache::lookup(&value) {
        for (p, e) in fs {
            *found.entry(p).or_default() += e;
        }
        return;
    }
    let mut steps = budget.rho_steps;
    let mut local: BTreeMap<BigUint, u32> = BTreeMap::new();
    let mut complete = true;
    let mut stack = vec![value.clone()];
    while let Some(c) = stack.pop() {
        if c < floor_sq || is_prime_big(&c) {
            *local.entry(c).or_default() += 1;
            continue;
        }
        match rho_big(&c, &mut steps) {
            Some(f) => {
                let other = &c / &f;
                stack.push(f);
                stack.push(other);
            }
            None => {
                complete = false;
                residues.push(Residue { value: c, floor });
            }
        }
    }
    if complete {
        super::cache::record(&value, &local.iter().map(|(p, e)| (p.clone(), *e)).collect::<Vec<_>>());
    }
    for (p, e) in local {
        *found.entry(p).or_default() += e;
    }
}

fn assemble(n: BigUint, found: BTreeMap<BigUint, u32>, mut residues: Vec<Residue>) -> IntFactorization {
    // a residue can coincide with a found prime power only if it is composite and
    // divisible by it; residues are composite and coprime to found primes by construction
    residues.sort_by(|a, b| a.value.cmp(&b.value));
    IntFactorization { n, factors: found.into_iter().collect(), residues }
}

/// Trial division to `budget.trial_limit`, then Pollard–Brent rho.
pub fn factorize(n: &BigUint, budget: &FactorBudget) -> IntFactorization {
    let mut found = BTreeMap::new();
    let mut residues = Vec::new();
    if n.is_zero() {
        return IntFactorization { n: n.clone(), factors: Vec::new(), residues: Vec::new() };
    }
    if let Some(v) = n.to_u64() {
        let pairs = factor_u64(v);
        return IntFactorization {
            n: n.clone(),
            factors: pairs.into_iter().map(|(p, e)| (BigUint::from(p), e)).collect(),
            residues: Vec::new(),
        };
    }
    let limit = budget.trial_limit.min(super::primes::SMALL_PRIME_LIMIT as u64);
    let mut value = n.clone();
    let mut floor = 2;
    for &p in small_primes() {
        let p = p as u64;
        if p > limit {
            break;
        }
        floor = p + 1;
        if BigUint::from(p) * p > value {
            break;
        }
        if (&value % p).is_zero() {
            let mut e = 0;
            while (&value % p).is_zero() {
                value /= p;
                e += 1;
            }
            found.insert(BigUint::from(p), e);
        }
    }
    finish_cofactor(value, floor, budget, true, &mut found, &mut residues);
    assemble(n.clone(), found, residues)
}

pub fn factorize_complete(n: &BigUint, budget: &FactorBudget) -> Result<IntFactorization, ArithError> {
    let f = factorize(n, budget);
    if f.is_complete() {
        Ok(f)
    } else {
        Err(ArithError::FactorizationTimeout(n.to_string()))
    }
}

/// Integer coefficients of the cyclotomic polynomial Φ_d, constant first.
pub fn cyclotomic_coeffs(d: u64) -> Vec<i64> {
    // Φ_d = Π_{e|d} (x^e − 1)^{μ(d/e)}: multiply the μ=+1 factors, divide by the μ=−1 ones
    let divs: Vec<u64> = (1..=d).filter(|e| d % e == 0).collect();
    let mut num: Vec<i64> = vec![1];
    let mut dens: Vec<u64> = Vec::new();
    for &e in &divs {
        match mobius(d / e) {
            1 => {
                let mut next = vec![0i64; num.len() + e as usize];
                for (i, &c) in num.iter().enumerate() {
                    next[i + e as usize] += c;
                    next[i] -= c;
                }
                num = next;
            }
            -1 => dens.push(e),
            _ => {}
        }
    }
    for e in dens {
        // divide by x^e − 1: synthetic division from the top
        let e = e as usize;
        let deg = num.len() - 1;
        let mut quo = vec![0i64; deg - e + 1];
        let mut rem = num.clone();
        for i in (e..=deg).rev() {
            let c = rem[i];
            quo[i - e] = c;
            rem[i] -= c;
            rem[i - e] += c;
        }
        debug_assert!(rem.iter().all(|&c| c == 0));
        num = quo;
    }
    num
}

pub fn mobius(n: u64) -> i32 {
    let mut sign = 1;
    for (_, e) in factor_u64(n) {
        if e > 1 {
            return 0;
        }
        sign = -sign;
    }
    sign
}

pub fn cyclotomic_value(d: u64, q: u64) -> BigUint {
    let coeffs = cyclotomic_coeffs(d);
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    let qb = BigUint::from(q);
    let mut pw = BigUint::one();
    for &c in &coeffs {
        if c > 0 {
            pos += &pw * (c as u64);
        } else if c < 0 {
            neg += &pw * ((-c) as u64);
        }
        pw *= &qb;
    }
    pos - neg
}

/// Φ_d(q) mod p from the integer coefficients.
pub(crate) fn cyclotomic_mod(coeffs: &[i64], q: u64, p: u64) -> u64 {
    let qm = (q % p) as u128;
    let p128 = p as u128;
    let mut acc: u128 = 0;
    for &c in coeffs.iter().rev() {
        let cm = if c >= 0 { (c as u128) % p128 } else { p128 - ((-c) as u128 % p128) };
        acc = (acc * qm + cm) % p128;
    }
    acc as u64
}

pub fn divisors_u64(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor_u64(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Factorization of q^m − 1 assembled from its cyclotomic pieces Φ_d(q), d | m.
/// With `refine = false` composite cofactors are left as certified residues.
pub fn factor_q_pow_m_minus_1(q: u64, m: u64, budget: &FactorBudget, refine: bool) -> IntFactorization {
    let mut found = BTreeMap::new();
    let mut residues = Vec::new();
    let mut n = BigUint::one();
    for d in divisors_u64(m) {
        let piece = cyclotomic_value(d, q);
        n *= &piece;
        factor_cyclotomic_piece(d, q, piece, budget, refine, &mut found, &mut residues);
    }
    assemble(n, found, residues)
}

pub(crate) fn factor_cyclotomic_piece(
    d: u64,
    q: u64,
    piece: BigUint,
    budget: &FactorBudget,
    refine: bool,
    found: &mut BTreeMap<BigUint, u32>,
    residues: &mut Vec<Residue>,
) {
    if let Some(v) = piece.to_u64() {
        for (p, e) in factor_u64(v) {
            *found.entry(BigUint::from(p)).or_default() += e;
        }
        return;
    }
    let limit = budget.trial_limit;
    let candidates = cyclotomic_candidates(d, limit);
    let coeffs = cyclotomic_coeffs(d);
    let mut value = piece;
    for &p in &candidates {
        if cyclotomic_mod(&coeffs, q, p) != 0 {
            continue;
        }
        let mut e = 0;
        while (&value % p).is_zero() {
            value /= p;
            e += 1;
        }
        if e > 0 {
            *found.entry(BigUint::from(p)).or_default() += e;
        }
    }
    // every remaining prime is ≡ 1 mod d and above the trial limit
    let floor = (limit / d + 1) * d + 1;
    finish_cofactor(value, floor, budget, refine, found, residues);
}

/// Largest divisor of `e` coprime to δ = gcd(e, q−1), together with δ.
pub fn compute_qe(e: &IntFactorization, q: u64) -> (IntFactorization, BigUint) {
    let qm1 = BigUint::from(q - 1);
    let delta = e.n.gcd(&qm1);
    let mut factors = Vec::new();
    let mut n = BigUint::one();
    for (p, k) in &e.factors {
        if !(&delta % p).is_zero() {
            n *= p.pow(*k);
            factors.push((p.clone(), *k));
        }
    }
    let mut residues = Vec::new();
    for r in &e.residues {
        let mut v = r.value.clone();
        if r.floor <= q {
            // strip primes of δ that could hide in the residue
            for (p, _) in factor_u64(delta.to_u64().unwrap_or(q - 1)) {
                while (&v % p).is_zero() {
                    v /= p;
                }
            }
        }
        if !v.is_one() {
            n *= &v;
            residues.push(Residue { value: v, floor: r.floor });
        }
    }
    (IntFactorization { n, factors, residues }, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_examples() {
        assert!(factorize(&big(1), &FactorBudget::default()).factors.is_empty());
        let f = factorize(&big(255), &FactorBudget::default());
        assert_eq!(f.factors, vec![(big(3), 1), (big(5), 1), (big(17), 1)]);
        let f = factorize(&big(4194303), &FactorBudget::default());
        assert!(f.reconstructs());
        assert_eq!(f.factors, vec![(big(3), 1), (big(23), 1), (big(89), 1), (big(683), 1)]);
    }

    #[test]
    fn w_and_phi() {
        let f = factorize(&big(63), &FactorBudget::default());
        assert_eq!(f.w_int().unwrap(), big(4));
        assert_eq!(factorize(&big(15), &FactorBudget::default()).euler_phi().unwrap(), big(8));
        assert_eq!(IntFactorization::one().w_int().unwrap(), big(1));
    }

    #[test]
    fn qe_examples() {
        let e = factorize(&big(15), &FactorBudget::default());
        let (qe, d) = compute_qe(&e, 4);
        assert_eq!((qe.n, d), (big(5), big(3)));
        let e = factorize(&big(63), &FactorBudget::default());
        let (qe, d) = compute_qe(&e, 4);
        assert_eq!((qe.n, d), (big(7), big(3)));
        let e = factorize(&big(35), &FactorBudget::default());
        let (qe, d) = compute_qe(&e, 3);
        assert_eq!((qe.n, d), (big(35), big(1)));
    }

    #[test]
    fn cyclotomic_values() {
        assert_eq!(cyclotomic_coeffs(1), vec![-1, 1]);
        assert_eq!(cyclotomic_coeffs(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic_coeffs(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_value(7, 2), big(127));
        assert_eq!(cyclotomic_value(12, 10), big(9901));
        let coeffs = cyclotomic_coeffs(105);
        assert!(coeffs.contains(&-2));
    }

    #[test]
    fn q_pow_m_assembly() {
        let f = factor_q_pow_m_minus_1(4, 11, &FactorBudget::default(), true);
        assert_eq!(f.n, big(4194303));
        assert!(f.is_complete() && f.reconstructs());
        let f = factor_q_pow_m_minus_1(2, 60, &FactorBudget::default(), true);
        assert_eq!(f.n, (BigUint::one() << 60u32) - 1u32);
        assert!(f.reconstructs());
        assert_eq!(f.omega(), Some(11));
    }

    #[test]
    fn residues_are_certified() {
        // Φ_8(10^7) with a tiny trial limit and no refinement
        let budget = FactorBudget { trial_limit: 100, rho_steps: 0 };
        let f = factor_q_pow_m_minus_1(10_000_019, 8, &budget, false);
        assert!(f.reconstructs());
        let full = factor_q_pow_m_minus_1(10_000_019, 8, &FactorBudget::default(), true);
        assert!(full.is_complete());
        assert!(f.omega_upper() >= full.omega().unwrap());
    }
}
