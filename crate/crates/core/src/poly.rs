//! Polynomials over F_q: Euclid, the module action f∘ξ, factoring x^m − 1,
//! and the arithmetic functions Φ_q, μ_q, Θ, W.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{cyclotomic_coeffs, divisors_u64, factor_u64};
use crate::field::{BaseField, FFElem, FieldCtx, FieldError};
use crate::util::ord_mod;

/// Seed for equal-degree splitting; the output is sorted, so it only affects speed.
const SPLIT_SEED: u64 = 0x0c0f_fee5_eed5;
pub const DEFAULT_DIVISOR_CAP: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomial is not monic")]
    NotMonic,
    #[error("polynomial does not divide the base polynomial")]
    NotADivisor,
    #[error("divisor count {0} exceeds the cap {1}")]
    TooManyDivisors(u128, usize),
    #[error("zero polynomial")]
    Zero,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Coefficients are F_q ranks, constant term first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Poly {
    c: Vec<u32>,
}

impl Poly {
    pub fn from_coeffs(mut c: Vec<u32>) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn constant(a: u32) -> Self {
        Poly::from_coeffs(vec![a])
    }

    pub fn one(f: &BaseField) -> Self {
        Poly::constant(f.one())
    }

    /// x^k.
    pub fn monomial(k: usize, f: &BaseField) -> Self {
        let mut c = vec![0; k + 1];
        c[k] = f.one();
        Poly { c }
    }

    /// x^m − 1.
    pub fn xm_minus_1(m: usize, f: &BaseField) -> Self {
        let mut p = Poly::monomial(m, f);
        p.c[0] = f.neg(f.one());
        Poly::from_coeffs(p.c)
    }

    /// x − c.
    pub fn linear(c: u32, f: &BaseField) -> Self {
        Poly::from_coeffs(vec![f.neg(c), f.one()])
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn lead(&self) -> u32 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.c.get(i).copied().unwrap_or(0)
    }

    pub fn is_one(&self, f: &BaseField) -> bool {
        self.c.len() == 1 && self.c[0] == f.one()
    }

    pub fn is_monic(&self, f: &BaseField) -> bool {
        self.lead() == f.one()
    }

    pub fn add(&self, o: &Poly, f: &BaseField) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs((0..n).map(|i| f.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn sub(&self, o: &Poly, f: &BaseField) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::from_coeffs((0..n).map(|i| f.sub(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn scale(&self, a: u32, f: &BaseField) -> Poly {
        Poly::from_coeffs(self.c.iter().map(|&x| f.mul(x, a)).collect())
    }

    pub fn mul(&self, o: &Poly, f: &BaseField) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0u32; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        Poly::from_coeffs(out)
    }

    pub fn divrem(&self, d: &Poly, f: &BaseField) -> Result<(Poly, Poly), PolyError> {
        if d.is_zero() {
            return Err(PolyError::Zero);
        }
        if self.c.len() < d.c.len() {
            return Ok((Poly::zero(), self.clone()));
        }
        let inv_lead = f.inv(d.lead())?;
        let dd = d.degree();
        let mut r = self.c.clone();
        let mut quo = vec![0u32; self.c.len() - dd];
        for i in (dd..r.len()).rev() {
            let c = f.mul(r[i], inv_lead);
            if c == 0 {
                continue;
            }
            quo[i - dd] = c;
            for (j, &dj) in d.c.iter().enumerate() {
                r[i - dd + j] = f.sub(r[i - dd + j], f.mul(c, dj));
            }
        }
        r.truncate(dd);
        Ok((Poly::from_coeffs(quo), Poly::from_coeffs(r)))
    }

    /// Remainder mod a nonzero divisor.
    pub fn rem(&self, d: &Poly, f: &BaseField) -> Poly {
        self.divrem(d, f).expect("nonzero modulus").1
    }

    pub fn monic(&self, f: &BaseField) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let inv = f.inv(self.lead()).expect("nonzero lead");
        self.scale(inv, f)
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, o: &Poly, f: &BaseField) -> Poly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(&b, f);
            a = b;
            b = r;
        }
        a.monic(f)
    }

    /// Inverse of self modulo `m` when coprime.
    pub fn inv_mod(&self, m: &Poly, f: &BaseField) -> Option<Poly> {
        let (mut r0, mut r1) = (m.clone(), self.rem(m, f));
        let (mut s0, mut s1) = (Poly::zero(), Poly::one(f));
        while !r1.is_zero() {
            let (qt, r) = r0.divrem(&r1, f).ok()?;
            let s = s0.sub(&qt.mul(&s1, f), f);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0.degree() != 0 || r0.is_zero() {
            return None;
        }
        let c = f.inv(r0.lead()).ok()?;
        Some(s0.scale(c, f).rem(m, f))
    }

    pub fn mulmod(&self, o: &Poly, m: &Poly, f: &BaseField) -> Poly {
        self.mul(o, f).rem(m, f)
    }

    pub fn powmod(&self, e: &BigUint, m: &Poly, f: &BaseField) -> Poly {
        let mut acc = Poly::one(f).rem(m, f);
        let base = self.rem(m, f);
        for i in (0..e.bits()).rev() {
            acc = acc.mulmod(&acc, m, f);
            if e.bit(i) {
                acc = acc.mulmod(&base, m, f);
            }
        }
        acc
    }

    pub fn powmod_u64(&self, e: u64, m: &Poly, f: &BaseField) -> Poly {
        self.powmod(&BigUint::from(e), m, f)
    }

    pub fn derivative(&self, f: &BaseField) -> Poly {
        Poly::from_coeffs(
            self.c.iter().enumerate().skip(1).map(|(i, &a)| f.mul(a, f.from_int(i as i64))).collect(),
        )
    }

    /// Ben-Or: no factor of degree ≤ n/2.
    pub fn is_irreducible(&self, f: &BaseField) -> bool {
        let n = self.degree();
        if self.is_zero() || n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let x = Poly::monomial(1, f);
        let q = BigUint::from(f.q());
        let mut xp = x.clone();
        for _ in 1..=n / 2 {
            xp = xp.powmod(&q, self, f);
            let g = xp.sub(&x, f).gcd(self, f);
            if !g.is_one(f) {
                return false;
            }
        }
        true
    }

    /// Human-readable form in x; F_q coefficients are shown in u when s > 1.
    pub fn display(&self, f: &BaseField) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for i in (0..self.c.len()).rev() {
            let a = self.c[i];
            if a == 0 {
                continue;
            }
            if !out.is_empty() {
                out.push_str(" + ");
            }
            let coef = display_fq(a, f);
            let unit = a == f.one();
            match i {
                0 => out.push_str(&coef),
                _ => {
                    if !unit {
                        let _ = write!(out, "{coef}*");
                    }
                    out.push('x');
                    if i > 1 {
                        let _ = write!(out, "^{i}");
                    }
                }
            }
        }
        out
    }
}

/// F_q value as an integer (prime field) or a polynomial in u.
pub fn display_fq(a: u32, f: &BaseField) -> String {
    if f.is_prime_field() {
        return a.to_string();
    }
    let d = f.digits(a);
    let mut terms = Vec::new();
    for (i, &c) in d.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let t = match (i, c) {
            (0, _) => c.to_string(),
            (1, 1) => "u".to_string(),
            (1, _) => format!("{c}u"),
            (_, 1) => format!("u^{i}"),
            _ => format!("{c}u^{i}"),
        };
        terms.push(t);
    }
    if terms.is_empty() {
        "0".into()
    } else if terms.len() == 1 {
        terms.pop().unwrap_or_default()
    } else {
        format!("({})", terms.join("+"))
    }
}

/// Canonical order: degree first, then coefficients compared from the constant upward.
impl Ord for Poly {
    fn cmp(&self, o: &Self) -> Ordering {
        self.c.len().cmp(&o.c.len()).then_with(|| self.c.cmp(&o.c))
    }
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// First monic irreducible of degree n in canonical order.
pub fn first_irreducible(f: &BaseField, n: usize) -> Poly {
    assert!(n >= 1);
    let q = f.q() as u32;
    // constant term 0 is reducible for n > 1 and would make the root zero for n = 1,
    // so start at constant rank 1
    let mut digits = vec![0u32; n];
    digits[0] = 1;
    loop {
        let mut c = digits.clone();
        c.push(f.one());
        let cand = Poly::from_coeffs(c);
        if cand.is_irreducible(f) {
            return cand;
        }
        // increment with digits[0] most significant
        let mut i = n - 1;
        loop {
            digits[i] += 1;
            if digits[i] < q {
                break;
            }
            digits[i] = 0;
            assert!(i > 0, "no irreducible polynomial found");
            i -= 1;
        }
    }
}

pub fn gcd_poly(a: &Poly, b: &Poly, f: &BaseField) -> Poly {
    a.gcd(b, f)
}

/// f∘ξ = Σ a_i ξ^{q^i}.
pub fn module_action(ctx: &FieldCtx, fpoly: &Poly, xi: &FFElem) -> Result<FFElem, FieldError> {
    ctx.check(xi)?;
    let m = ctx.m();
    let conj = ctx.conjugates(xi)?;
    let mut acc = vec![0u32; m];
    for (i, &a) in fpoly.coeffs().iter().enumerate() {
        if a != 0 {
            ctx.axpy_raw(a, conj[i % m].coeffs(), &mut acc);
        }
    }
    ctx.elem(acc)
}

/// One coset class of x^{m'} − 1: the φ(d)/t factors of degree t = ord_d(q) from Φ_d.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetClass {
    pub d: u64,
    pub degree: u64,
    pub count: u64,
}

/// Factor degrees of x^m − 1 over F_q from cyclotomic cosets, no field needed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XmProfile {
    pub q: u64,
    pub m: u64,
    pub m_prime: u64,
    /// p^i, the common multiplicity of every factor.
    pub multiplicity: u64,
    pub classes: Vec<CosetClass>,
}

impl XmProfile {
    pub fn new(q: u64, m: u64) -> Self {
        let p = factor_u64(q)[0].0;
        let mut mp = m;
        let mut mult = 1;
        while mp % p == 0 {
            mp /= p;
            mult *= p;
        }
        let mut classes = Vec::new();
        for d in divisors_u64(mp) {
            let t = ord_mod(q, d);
            let phi: u64 = factor_u64(d).iter().map(|&(l, e)| l.pow(e - 1) * (l - 1)).product();
            classes.push(CosetClass { d, degree: t, count: phi / t });
        }
        XmProfile { q, m, m_prime: mp, multiplicity: mult, classes }
    }

    pub fn distinct_count(&self) -> u64 {
        self.classes.iter().map(|c| c.count).sum()
    }

    /// Degrees of the distinct factors, ascending (canonical order is by degree first).
    pub fn factor_degrees(&self) -> Vec<u64> {
        let mut v: Vec<u64> =
            self.classes.iter().flat_map(|c| std::iter::repeat(c.degree).take(c.count as usize)).collect();
        v.sort_unstable();
        v
    }

    /// Degree histogram: (degree, number of distinct factors of that degree).
    pub fn histogram(&self) -> Vec<(u64, u64)> {
        let mut h: Vec<(u64, u64)> = Vec::new();
        for d in self.factor_degrees() {
            match h.last_mut() {
                Some((deg, n)) if *deg == d => *n += 1,
                _ => h.push((d, 1)),
            }
        }
        h
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyFactorization {
    pub base: Poly,
    pub factors: Vec<(Poly, u32)>,
}

impl PolyFactorization {
    pub fn distinct(&self) -> usize {
        self.factors.len()
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|(p, e)| p.degree() * *e as usize).sum()
    }

    pub fn reconstruct(&self, f: &BaseField) -> Poly {
        let mut acc = Poly::one(f);
        for (p, e) in &self.factors {
            for _ in 0..*e {
                acc = acc.mul(p, f);
            }
        }
        acc
    }

    /// Factorization of the divisor with the given exponents (clamped to the base).
    pub fn divisor(&self, exps: &[u32], f: &BaseField) -> PolyFactorization {
        let factors: Vec<(Poly, u32)> = self
            .factors
            .iter()
            .zip(exps)
            .filter(|(_, &e)| e > 0)
            .map(|((p, m), &e)| (p.clone(), e.min(*m)))
            .collect();
        let mut fac = PolyFactorization { base: Poly::one(f), factors };
        fac.base = fac.reconstruct(f);
        fac
    }

    /// Exponent vector of a monic divisor g of the base.
    pub fn exponents_of(&self, g: &Poly, f: &BaseField) -> Result<Vec<u32>, PolyError> {
        if g.is_zero() {
            return Err(PolyError::Zero);
        }
        if !g.is_monic(f) {
            return Err(PolyError::NotMonic);
        }
        let mut rest = g.clone();
        let mut exps = Vec::with_capacity(self.factors.len());
        for (p, m) in &self.factors {
            let mut e = 0;
            while e < *m {
                let (qt, r) = rest.divrem(p, f)?;
                if !r.is_zero() {
                    break;
                }
                rest = qt;
                e += 1;
            }
            exps.push(e);
        }
        if !rest.is_one(f) {
            return Err(PolyError::NotADivisor);
        }
        Ok(exps)
    }

    pub fn factor_divisor(&self, g: &Poly, f: &BaseField) -> Result<PolyFactorization, PolyError> {
        let e = self.exponents_of(g, f)?;
        Ok(self.divisor(&e, f))
    }

    pub fn divisor_count(&self) -> u128 {
        self.factors.iter().map(|(_, e)| *e as u128 + 1).product()
    }

    /// Exponent vectors of all divisors (not sorted).
    pub fn divisor_exponents(&self, cap: usize) -> Result<Vec<Vec<u32>>, PolyError> {
        let n = self.divisor_count();
        if n > cap as u128 {
            return Err(PolyError::TooManyDivisors(n, cap));
        }
        let mut out = vec![Vec::new()];
        for (_, m) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (*m as usize + 1));
            for v in &out {
                for e in 0..=*m {
                    let mut w = v.clone();
                    w.push(e);
                    next.push(w);
                }
            }
            out = next;
        }
        Ok(out)
    }

    /// All monic divisors in canonical order.
    pub fn divisors(&self, f: &BaseField, cap: usize) -> Result<Vec<Poly>, PolyError> {
        let mut v: Vec<Poly> = self
            .divisor_exponents(cap)?
            .into_iter()
            .map(|e| self.divisor(&e, f).base)
            .collect();
        v.sort();
        Ok(v)
    }

    /// Divisors paired with their factorizations, in canonical order of the divisor.
    pub fn divisors_factored(&self, f: &BaseField, cap: usize) -> Result<Vec<PolyFactorization>, PolyError> {
        let mut v: Vec<PolyFactorization> =
            self.divisor_exponents(cap)?.into_iter().map(|e| self.divisor(&e, f)).collect();
        v.sort_by(|a, b| a.base.cmp(&b.base));
        Ok(v)
    }
}

pub fn w_poly(f: &PolyFactorization) -> BigUint {
    BigUint::one() << f.distinct()
}

/// Φ_q(g) = Π (q^{e·d} − q^{(e−1)·d}) over the factorization of g.
pub fn phi_q(g: &PolyFactorization, q: u64) -> BigUint {
    let qb = BigUint::from(q);
    let mut acc = BigUint::one();
    for (p, e) in &g.factors {
        let d = p.degree() as u32;
        acc *= qb.pow(e * d) - qb.pow((e - 1) * d);
    }
    acc
}

pub fn mobius_q(g: &PolyFactorization) -> i32 {
    if g.factors.iter().any(|(_, e)| *e > 1) {
        0
    } else if g.factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn theta_q(g: &PolyFactorization, q: u64) -> BigRational {
    let num = BigInt::from(phi_q(g, q));
    let den = BigInt::from(BigUint::from(q).pow(g.degree() as u32));
    BigRational::new(num, den)
}

/// Φ_d(x) reduced into F_q[x].
fn cyclotomic_poly(d: u64, f: &BaseField) -> Poly {
    Poly::from_coeffs(cyclotomic_coeffs(d).iter().map(|&c| f.from_int(c)).collect())
}

/// Splits a squarefree product of irreducibles of equal degree t.
fn equal_degree_split(g: &Poly, t: usize, f: &BaseField, rng: &mut ChaCha8Rng, out: &mut Vec<Poly>) {
    let n = g.degree();
    if n == t {
        out.push(g.monic(f));
        return;
    }
    let q = BigUint::from(f.q());
    let qt = q.pow(t as u32);
    loop {
        let a = Poly::from_coeffs((0..n).map(|_| rng.gen_range(0..f.q() as u32)).collect());
        if a.degree() == 0 {
            continue;
        }
        let b = if f.p() == 2 {
            // absolute trace map a + a^2 + … + a^{2^{st−1}}
            let bits = f.pp.s as usize * t;
            let mut acc = a.rem(g, f);
            let mut cur = acc.clone();
            for _ in 1..bits {
                cur = cur.mulmod(&cur, g, f);
                acc = acc.add(&cur, f);
            }
            acc
        } else {
            let e = (&qt - 1u32) >> 1;
            a.powmod(&e, g, f).sub(&Poly::one(f), f)
        };
        let h = b.gcd(g, f);
        let dh = h.degree();
        if !h.is_zero() && dh > 0 && dh < n {
            let (other, _) = g.divrem(&h, f).expect("h divides g");
            equal_degree_split(&h, t, f, rng, out);
            equal_degree_split(&other, t, f, rng, out);
            return;
        }
    }
}

/// x^m − 1 = Π_{d | m'} Φ_d(x)^{p^i}, each Φ_d split into φ(d)/ord_d(q) factors of degree ord_d(q).
pub fn factor_xm_minus_1(f: &BaseField, m: usize) -> PolyFactorization {
    let prof = XmProfile::new(f.q(), m as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(SPLIT_SEED);
    let mut irreducibles = Vec::new();
    for class in &prof.classes {
        let phi_d = cyclotomic_poly(class.d, f);
        let mut parts = Vec::new();
        equal_degree_split(&phi_d, class.degree as usize, f, &mut rng, &mut parts);
        debug_assert_eq!(parts.len() as u64, class.count);
        irreducibles.extend(parts);
    }
    irreducibles.sort();
    let mult = prof.multiplicity as u32;
    PolyFactorization {
        base: Poly::xm_minus_1(m, f),
        factors: irreducibles.into_iter().map(|p| (p, mult)).collect(),
    }
}

/// Distinct-degree factorization of a squarefree monic polynomial: (degree, product).
pub fn distinct_degree(g: &Poly, f: &BaseField) -> Vec<(usize, Poly)> {
    let x = Poly::monomial(1, f);
    let q = BigUint::from(f.q());
    let mut rest = g.monic(f);
    let mut xp = x.clone();
    let mut out = Vec::new();
    let mut i = 0;
    while rest.degree() > 0 {
        i += 1;
        if 2 * i > rest.degree() {
            out.push((rest.degree(), rest.clone()));
            break;
        }
        xp = xp.powmod(&q, &rest, f);
        let h = xp.sub(&x, f).gcd(&rest, f);
        if h.degree() > 0 {
            rest = rest.divrem(&h, f).expect("divides").0;
            xp = xp.rem(&rest, f);
            out.push((i, h));
        }
    }
    out
}

/// Literal and degree-below-order conventions for ρ(q, m) = (#factors of x^{m'}−1)/m'.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoRatio {
    pub m_prime: u64,
    /// t = ord_{m'}(q), the largest factor degree.
    pub order: u64,
    #[serde(with = "crate::util::ratio")]
    pub literal: BigRational,
    #[serde(with = "crate::util::ratio")]
    pub below_order: BigRational,
    pub histogram: Vec<(u64, u64)>,
}

pub fn rho_factor_ratio(q: u64, m: u64) -> RhoRatio {
    let prof = XmProfile::new(q, m);
    let t = ord_mod(q, prof.m_prime);
    let all = prof.distinct_count();
    let below: u64 = prof.classes.iter().filter(|c| c.degree < t).map(|c| c.count).sum();
    let den = BigInt::from(prof.m_prime);
    RhoRatio {
        m_prime: prof.m_prime,
        order: t,
        literal: BigRational::new(BigInt::from(all), den.clone()),
        below_order: BigRational::new(BigInt::from(below), den),
        histogram: prof.histogram(),
    }
}

/// The ρ-weighted identity m'·ρ(q,m') = m·ρ(q,m) holds by construction: both count the same factors.
pub fn rho_scaled_count(r: &RhoRatio) -> BigRational {
    &r.literal * BigRational::from_integer(BigInt::from(r.m_prime))
}

pub fn is_zero_ratio(r: &BigRational) -> bool {
    r.is_zero()
}
