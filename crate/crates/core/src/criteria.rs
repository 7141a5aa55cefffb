//! Existence criteria: the main inequality, the prime sieve with automatic
//! choice of (e, f), closed-form thresholds, and the ω-cap iterations that
//! bound the remaining search ranges.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arith::primes::small_primes;
use crate::arith::{
    c_r_constant, compute_qe, factor_q_pow_m_minus_1, CrMode, FactorBudget, IntFactorization,
};
use crate::field::{BaseField, FieldError, PrimePower};
use crate::hp::Real;
use crate::poly::{factor_xm_minus_1, Poly, PolyError, XmProfile, DEFAULT_DIVISOR_CAP};
use crate::search::BinReport;
use crate::util::{dec, ratio};

pub use crate::poly::{rho_factor_ratio, RhoRatio};

/// Significant digits of every real recorded in a transcript.
pub const TRANSCRIPT_DIGITS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CriteriaError {
    #[error("sieve delta is not positive: {0}")]
    NonPositiveDelta(String),
    #[error("{0} does not divide q^m - 1")]
    NotADivisor(String),
    #[error("x^m - 1 has no monic divisor of degree {0}")]
    NoDegreeKDivisor(usize),
    #[error("g must be a monic divisor of x^m - 1 of degree k")]
    BadG,
    #[error("factor selection does not match x^m - 1: {0}")]
    BadSelection(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Ordered key/value record of a computation. Serialized as a JSON object
/// whose keys keep insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript(Vec<(String, String)>);

impl Transcript {
    pub fn new() -> Self {
        Transcript(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn append(&mut self, other: Transcript) {
        self.0.extend(other.0);
    }
}

impl Serialize for Transcript {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Transcript {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Transcript;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of strings")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> Result<Transcript, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = a.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(Transcript(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn real_str(x: &Real) -> String {
    x.sci(TRANSCRIPT_DIGITS)
}

/// One distinct irreducible factor of x^m − 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XmFactor {
    pub degree: u64,
    pub multiplicity: u32,
    /// Multiplicity left in (x^m − 1)/g. Positive exactly for the factors of f̃ = (x^m − 1)/g's radical.
    pub cofactor_mult: u32,
    /// The factor itself when x^m − 1 was factored explicitly; the coset-only path leaves it out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<Poly>,
}

impl XmFactor {
    pub fn in_ftilde(&self) -> bool {
        self.cofactor_mult > 0
    }
}

/// Everything the criteria need about one (q, m, r, k).
#[derive(Clone, Debug)]
pub struct CriterionInput {
    pub q: u64,
    pub m: u64,
    pub r: u64,
    pub k: usize,
    pub g: Poly,
    pub grp: IntFactorization,
    /// Distinct irreducible factors of x^m − 1, by degree.
    pub factors: Vec<XmFactor>,
}

impl CriterionInput {
    /// Default g: 1 for k = 0, x − 1 for k = 1, otherwise the canonically first
    /// monic degree-k divisor. The first two avoid building the field.
    pub fn standard(q: u64, m: u64, r: u64, k: usize, grp: IntFactorization) -> Result<Self, CriteriaError> {
        let pp = PrimePower::new(q)?;
        if k >= 2 {
            let base = BaseField::new(q)?;
            let xm1 = factor_xm_minus_1(&base, m as usize);
            let g = xm1
                .divisors(&base, DEFAULT_DIVISOR_CAP)?
                .into_iter()
                .find(|d| d.degree() == k)
                .ok_or(CriteriaError::NoDegreeKDivisor(k))?;
            return Self::with_g(&base, m, r, g, grp);
        }
        let one = pp.p.pow(pp.s - 1) as u32;
        let neg_one = ((pp.p - 1) * pp.p.pow(pp.s - 1)) as u32;
        let g = if k == 0 { Poly::from_coeffs(vec![one]) } else { Poly::from_coeffs(vec![neg_one, one]) };
        let prof = XmProfile::new(q, m);
        let mult = prof.multiplicity as u32;
        let mut classes = prof.classes.clone();
        classes.sort_by_key(|c| (c.degree, c.d));
        let mut factors = Vec::new();
        for c in &classes {
            for _ in 0..c.count {
                let used = u32::from(k == 1 && c.d == 1);
                factors.push(XmFactor { degree: c.degree, multiplicity: mult, cofactor_mult: mult - used, poly: None });
            }
        }
        Ok(CriterionInput { q, m, r, k, g, grp, factors })
    }

    /// Explicit g, which must be a monic divisor of x^m − 1.
    pub fn with_g(base: &BaseField, m: u64, r: u64, g: Poly, grp: IntFactorization) -> Result<Self, CriteriaError> {
        let xm1 = factor_xm_minus_1(base, m as usize);
        let exps = xm1.exponents_of(&g, base).map_err(|_| CriteriaError::BadG)?;
        let factors = xm1
            .factors
            .iter()
            .zip(&exps)
            .map(|((p, mult), e)| XmFactor {
                degree: p.degree() as u64,
                multiplicity: *mult,
                cofactor_mult: mult - e,
                poly: Some(p.clone()),
            })
            .collect();
        Ok(CriterionInput { q: base.q(), m, r, k: g.degree(), g, grp, factors })
    }

    /// The selection f = x^m − 1.
    pub fn all_factors(&self) -> Vec<bool> {
        vec![true; self.factors.len()]
    }

    /// Indices of the candidate factors of f̃, in order.
    pub fn ftilde_candidates(&self) -> Vec<usize> {
        (0..self.factors.len()).filter(|&i| self.factors[i].in_ftilde()).collect()
    }

    /// Q with its gcd δ = gcd(q^m − 1, q − 1).
    pub fn q_part(&self) -> (IntFactorization, BigUint) {
        compute_qe(&self.grp, self.q)
    }
}

/// Number of primes a possibly partial factorization can have: the known ones and an upper bound on the rest.
fn omega_parts(f: &IntFactorization) -> (usize, usize) {
    (f.factors.len(), f.residues.iter().map(|r| r.max_prime_count() as usize).sum())
}

/// Decides q^{m/2−k−2} > r·2^w·Δ exactly, comparing squares.
fn exceeds(q: u64, m: u64, k: usize, r: u64, w: usize, big_delta: &BigRational) -> bool {
    let rhs = BigRational::from_integer(BigInt::from(r) << w) * big_delta;
    let rhs2 = &rhs * &rhs;
    let e2 = m as i64 - 2 * k as i64 - 4;
    let qb = BigInt::from(q);
    if e2 >= 0 {
        BigRational::from_integer(num_traits::pow(qb, e2 as usize)) > rhs2
    } else {
        BigRational::one() > rhs2 * num_traits::pow(qb, (-e2) as usize)
    }
}

fn lhs_real(q: u64, m: u64, k: usize) -> Real {
    let e = Real::from_i64(m as i64 - 2 * k as i64 - 4).div(&Real::from_u64(2));
    Real::from_u64(q).pow(&e)
}

fn rhs_real(r: u64, w: usize, big_delta: &BigRational) -> Real {
    Real::from_u64(r).mul(&Real::from_biguint(&(BigUint::one() << w))).mul(&Real::from_ratio(big_delta))
}

/// Entries written by `head`.
const HEAD_KEYS: usize = 5;

fn head(t: &mut Transcript, input: &CriterionInput) {
    t.push("q", input.q);
    t.push("m", input.m);
    t.push("r", input.r);
    t.push("k", input.k);
    // index:degree^multiplicity, * marks factors of f̃ (the indices a sieve override uses)
    let fs: Vec<String> = input
        .factors
        .iter()
        .enumerate()
        .map(|(i, x)| format!("{i}:{}^{}{}", x.degree, x.multiplicity, if x.in_ftilde() { "*" } else { "" }))
        .collect();
    t.push("factors", fs.join(" "));
}

/// q^{m/2−k−2} > r·W(Q_e)·W(f̃) with f̃ = gcd(f, (x^m − 1)/g). `f` selects
/// distinct factors of x^m − 1. A partial factorization of e enters through
/// the certified bound on its unknown primes, so a pass is still a proof.
pub fn main_inequality(
    input: &CriterionInput,
    e: &IntFactorization,
    f: &[bool],
) -> Result<(bool, Transcript), CriteriaError> {
    if !(&input.grp.n % &e.n).is_zero() {
        return Err(CriteriaError::NotADivisor(e.n.to_string()));
    }
    if f.len() != input.factors.len() {
        return Err(CriteriaError::BadSelection(format!("{} flags for {} factors", f.len(), input.factors.len())));
    }
    let (qe, gcd) = compute_qe(e, input.q);
    let (known, unknown) = omega_parts(&qe);
    let wf = input.factors.iter().zip(f).filter(|(x, &sel)| sel && x.in_ftilde()).count();
    let w = known + unknown + wf;
    let one = BigRational::one();
    let holds = exceeds(input.q, input.m, input.k, input.r, w, &one);
    let mut t = Transcript::new();
    head(&mut t, input);
    t.push("e", &e.n);
    t.push("gcd_e_q_minus_1", gcd);
    t.push("Q_e", &qe.n);
    t.push("omega_Q_e_known", known);
    t.push("omega_Q_e_unknown_max", unknown);
    t.push("W_e", format!("2^{}", known + unknown));
    t.push("W_ftilde", format!("2^{wf}"));
    t.push("Delta", 1);
    t.push("lhs", real_str(&lhs_real(input.q, input.m, input.k)));
    t.push("rhs", real_str(&rhs_real(input.r, w, &one)));
    t.push("holds", holds);
    Ok((holds, t))
}

/// Unknown primes left in a residue: at most `count` of them, each at least `floor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownPrimes {
    pub count: u32,
    pub floor: u64,
}

/// A sieve choice: e is the product of the kept primes of Q, and the base f
/// keeps the listed factors of f̃ (plus everything outside f̃, which costs nothing).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SieveConfig {
    #[serde(with = "dec::list")]
    pub kept_primes: Vec<BigUint>,
    #[serde(with = "dec::list")]
    pub dropped_primes: Vec<BigUint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_unknown: Vec<UnknownPrimes>,
    /// Indices into `CriterionInput::factors`.
    pub kept_factors: Vec<usize>,
    pub dropped_factors: Vec<usize>,
    pub dropped_degrees: Vec<u64>,
    pub s1: usize,
    pub s2: usize,
    #[serde(with = "ratio")]
    pub delta: BigRational,
    #[serde(with = "ratio", rename = "Delta")]
    pub big_delta: BigRational,
}

impl SieveConfig {
    /// Builds the config keeping exactly `kept_primes` (primes of Q) and
    /// `kept_factors` (candidates of f̃). Unknown residue primes are always dropped,
    /// each contributing at most 1/floor.
    pub fn new(input: &CriterionInput, kept_primes: &[BigUint], kept_factors: &[usize]) -> Result<Self, CriteriaError> {
        let (qf, _) = input.q_part();
        for p in kept_primes {
            if !qf.factors.iter().any(|(x, _)| x == p) {
                return Err(CriteriaError::NotADivisor(p.to_string()));
            }
        }
        let cands = input.ftilde_candidates();
        for i in kept_factors {
            if !cands.contains(i) {
                return Err(CriteriaError::BadSelection(format!("factor {i} is not a factor of f~")));
            }
        }
        let mut kept: Vec<BigUint> = kept_primes.to_vec();
        kept.sort();
        kept.dedup();
        let dropped_primes: Vec<BigUint> =
            qf.factors.iter().map(|(p, _)| p.clone()).filter(|p| !kept.contains(p)).collect();
        let dropped_unknown: Vec<UnknownPrimes> = qf
            .residues
            .iter()
            .map(|r| UnknownPrimes { count: r.max_prime_count(), floor: r.floor })
            .collect();
        let mut kf: Vec<usize> = kept_factors.to_vec();
        kf.sort_unstable();
        kf.dedup();
        let dropped_factors: Vec<usize> = cands.iter().copied().filter(|i| !kf.contains(i)).collect();
        let dropped_degrees: Vec<u64> = dropped_factors.iter().map(|&i| input.factors[i].degree).collect();

        let mut delta = BigRational::one();
        for p in &dropped_primes {
            delta -= BigRational::new(BigInt::one(), BigInt::from(p.clone()));
        }
        for u in &dropped_unknown {
            delta -= BigRational::new(BigInt::from(u.count), BigInt::from(u.floor));
        }
        let qb = BigInt::from(input.q);
        for &d in &dropped_degrees {
            delta -= BigRational::new(BigInt::one(), num_traits::pow(qb.clone(), d as usize));
        }
        let s1 = dropped_primes.len() + dropped_unknown.iter().map(|u| u.count as usize).sum::<usize>();
        let s2 = dropped_factors.len();
        if !delta.is_positive() {
            return Err(CriteriaError::NonPositiveDelta(format!("{}/{}", delta.numer(), delta.denom())));
        }
        let big_delta = big_delta_of(s1 + s2, &delta);
        Ok(SieveConfig {
            kept_primes: kept,
            dropped_primes,
            dropped_unknown,
            kept_factors: kf,
            dropped_factors,
            dropped_degrees,
            s1,
            s2,
            delta,
            big_delta,
        })
    }

    /// Keeps the j smallest known primes of Q and the first jf candidate factors of f̃.
    pub fn prefix(input: &CriterionInput, j: usize, jf: usize) -> Result<Self, CriteriaError> {
        let (qf, _) = input.q_part();
        let kept: Vec<BigUint> = qf.factors.iter().take(j).map(|(p, _)| p.clone()).collect();
        let cands: Vec<usize> = input.ftilde_candidates().into_iter().take(jf).collect();
        Self::new(input, &kept, &cands)
    }
}

/// Δ = (s − 1)/δ + 2 with s = s₁ + s₂ (so Δ = 1 when nothing is dropped).
pub fn big_delta_of(s: usize, delta: &BigRational) -> BigRational {
    BigRational::from_integer(BigInt::from(s as i64 - 1)) / delta + BigRational::from_integer(BigInt::from(2))
}

/// q^{m/2−k−2} > r·W(e)·W(f̃)·Δ for a sieve config.
pub fn sieve_inequality(input: &CriterionInput, config: &SieveConfig) -> Result<(bool, Transcript), CriteriaError> {
    if !config.delta.is_positive() {
        return Err(CriteriaError::NonPositiveDelta(format!("{}/{}", config.delta.numer(), config.delta.denom())));
    }
    let we = config.kept_primes.len();
    let wf = config.kept_factors.len();
    let holds = exceeds(input.q, input.m, input.k, input.r, we + wf, &config.big_delta);
    let mut t = Transcript::new();
    head(&mut t, input);
    let e: BigUint = config.kept_primes.iter().product();
    t.push("e", e);
    t.push("s1", config.s1);
    t.push("s2", config.s2);
    t.push("sieve_delta", real_str(&Real::from_ratio(&config.delta)));
    t.push("W_e", format!("2^{we}"));
    t.push("W_ftilde", format!("2^{wf}"));
    t.push("Delta", real_str(&Real::from_ratio(&config.big_delta)));
    t.push("lhs", real_str(&lhs_real(input.q, input.m, input.k)));
    t.push("rhs", real_str(&rhs_real(input.r, we + wf, &config.big_delta)));
    t.push("holds", holds);
    Ok((holds, t))
}

/// Outcome of the criteria without transcripts, for bulk scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuickOutcome {
    Main,
    /// Kept prime count and kept f̃-factor count of the first passing prefix config.
    Sieve(usize, usize),
    Undecided,
}

/// Main inequality with (Q, f̃), then the prefix sieve family scanned by
/// decreasing total dropped count. Floats only prune; every pass is
/// confirmed exactly and near-ties are decided exactly.
pub fn auto_sieve_quick(input: &CriterionInput) -> QuickOutcome {
    let (qf, _) = input.q_part();
    let (known, unknown) = omega_parts(&qf);
    let cands = input.ftilde_candidates();
    let nf = cands.len();
    if exceeds(input.q, input.m, input.k, input.r, known + unknown + nf, &BigRational::one()) {
        return QuickOutcome::Main;
    }
    let lhs = (input.m as f64 / 2.0 - input.k as f64 - 2.0) * (input.q as f64).ln();
    let ln_r = (input.r as f64).ln();
    let mut tail_p = vec![0.0f64; known + 1];
    for i in (0..known).rev() {
        tail_p[i] = tail_p[i + 1] + 1.0 / qf.factors[i].0.to_f64().unwrap_or(f64::INFINITY);
    }
    let unk_sum: f64 = qf.residues.iter().map(|r| r.max_prime_count() as f64 / r.floor as f64).sum();
    let mut tail_f = vec![0.0f64; nf + 1];
    for i in (0..nf).rev() {
        tail_f[i] = tail_f[i + 1] + (input.q as f64).powf(-(input.factors[cands[i]].degree as f64));
    }
    let tol = 1e-9 * (1.0 + lhs.abs());
    for t in 0..=known + nf {
        let lo = t.saturating_sub(nf);
        let hi = t.min(known);
        for j in (lo..=hi).rev() {
            let jf = t - j;
            let delta = 1.0 - tail_p[j] - unk_sum - tail_f[jf];
            if delta <= 1e-12 {
                continue;
            }
            let s = (known - j + unknown + nf - jf) as f64;
            let big = (s - 1.0) / delta + 2.0;
            let diff = lhs - (ln_r + t as f64 * std::f64::consts::LN_2 + big.ln());
            if diff < -tol {
                continue;
            }
            if let Ok(cfg) = SieveConfig::prefix(input, j, jf) {
                if exceeds(input.q, input.m, input.k, input.r, t, &cfg.big_delta) {
                    return QuickOutcome::Sieve(j, jf);
                }
            }
        }
    }
    QuickOutcome::Undecided
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum VerdictTag {
    ProvenMain,
    ProvenSieve { config: SieveConfig },
    ResolvedExistsBySearch { report: BinReport },
    ResolvedNotExistsBySearch { report: BinReport },
    PreconditionFail { reason: String },
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub q: u64,
    pub m: u64,
    pub r: u64,
    pub k: usize,
    #[serde(flatten)]
    pub tag: VerdictTag,
    pub transcript: Transcript,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self.tag {
            VerdictTag::ProvenMain => "ProvenMain",
            VerdictTag::ProvenSieve { .. } => "ProvenSieve",
            VerdictTag::ResolvedExistsBySearch { .. } => "ResolvedExistsBySearch",
            VerdictTag::ResolvedNotExistsBySearch { .. } => "ResolvedNotExistsBySearch",
            VerdictTag::PreconditionFail { .. } => "PreconditionFail",
            VerdictTag::Undecided => "Undecided",
        }
    }

    pub fn is_proven(&self) -> bool {
        matches!(self.tag, VerdictTag::ProvenMain | VerdictTag::ProvenSieve { .. })
    }

    pub fn is_undecided(&self) -> bool {
        matches!(self.tag, VerdictTag::Undecided)
    }

    /// A final answer: proven, resolved by search, or a failed precondition.
    pub fn is_definitive(&self) -> bool {
        !self.is_undecided()
    }
}

/// User-supplied sieve choice: e (its primes inside Q are kept) and the kept f̃ factor indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveOverride {
    pub e: BigUint,
    pub f: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CriteriaOptions {
    /// First pass: cheap trial division, composite cofactors kept as certified residues.
    pub light: FactorBudget,
    /// Second pass for cases the light pass leaves undecided.
    pub full: FactorBudget,
    pub g: Option<Poly>,
    pub sieve: Option<SieveOverride>,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        CriteriaOptions {
            light: FactorBudget { trial_limit: 2_000, rho_steps: 0 },
            full: FactorBudget::default(),
            g: None,
            sieve: None,
        }
    }
}

/// Does r divide q^m − 1?
pub fn divides_q_pow_m_minus_1(q: u64, m: u64, r: u64) -> bool {
    if r == 0 {
        return false;
    }
    let rb = BigUint::from(r);
    BigUint::from(q).modpow(&BigUint::from(m), &rb) == BigUint::one() % &rb
}

fn precondition(q: u64, m: u64, r: u64, k: usize) -> Result<Option<String>, CriteriaError> {
    PrimePower::new(q)?;
    if m == 0 {
        return Ok(Some("m must be positive".into()));
    }
    if k as u64 >= m {
        return Ok(Some(format!("k = {k} must be below m = {m}")));
    }
    if !divides_q_pow_m_minus_1(q, m, r) {
        return Ok(Some(format!("{r} does not divide q^m - 1")));
    }
    Ok(None)
}

fn build_input(q: u64, m: u64, r: u64, k: usize, grp: IntFactorization, g: &Option<Poly>) -> Result<CriterionInput, CriteriaError> {
    match g {
        Some(g) => {
            let base = BaseField::new(q)?;
            let input = CriterionInput::with_g(&base, m, r, g.clone(), grp)?;
            if input.k != k {
                return Err(CriteriaError::BadG);
            }
            Ok(input)
        }
        None => CriterionInput::standard(q, m, r, k, grp),
    }
}

/// Criteria only: precondition, main inequality, sieve. Undecided cases with
/// a partial factorization are retried once with the full budget.
pub fn criteria_verdict(q: u64, m: u64, r: u64, k: usize, opts: &CriteriaOptions) -> Result<Verdict, CriteriaError> {
    let mk = |tag, transcript| Verdict { q, m, r, k, tag, transcript };
    if let Some(reason) = precondition(q, m, r, k)? {
        let mut t = Transcript::new();
        t.push("reason", &reason);
        return Ok(mk(VerdictTag::PreconditionFail { reason }, t));
    }
    if let Some(ov) = &opts.sieve {
        let grp = factor_q_pow_m_minus_1(q, m, &opts.full, true);
        let input = build_input(q, m, r, k, grp, &opts.g)?;
        return override_verdict(&input, ov);
    }
    let grp = factor_q_pow_m_minus_1(q, m, &opts.light, false);
    let mut input = build_input(q, m, r, k, grp, &opts.g)?;
    let mut outcome = auto_sieve_quick(&input);
    if outcome == QuickOutcome::Undecided && !input.grp.is_complete() {
        input.grp = factor_q_pow_m_minus_1(q, m, &opts.full, true);
        outcome = auto_sieve_quick(&input);
    }
    verdict_from_outcome(&input, outcome)
}

/// Full verdict for an input, with transcript.
pub fn auto_sieve(input: &CriterionInput) -> Result<Verdict, CriteriaError> {
    let outcome = auto_sieve_quick(input);
    verdict_from_outcome(input, outcome)
}

fn verdict_from_outcome(input: &CriterionInput, outcome: QuickOutcome) -> Result<Verdict, CriteriaError> {
    let (main_ok, mut t) = main_inequality(input, &input.grp, &input.all_factors())?;
    let tag = match outcome {
        QuickOutcome::Main => {
            debug_assert!(main_ok);
            VerdictTag::ProvenMain
        }
        QuickOutcome::Sieve(j, jf) => {
            let cfg = SieveConfig::prefix(input, j, jf)?;
            let (ok, st) = sieve_inequality(input, &cfg)?;
            debug_assert!(ok);
            t.push("stage", "sieve");
            for (k, v) in st.entries().iter().skip(HEAD_KEYS) {
                t.push(&format!("sieve.{k}"), v);
            }
            VerdictTag::ProvenSieve { config: cfg }
        }
        QuickOutcome::Undecided => {
            t.push("stage", "undecided");
            let (qf, _) = input.q_part();
            t.push("sieve_family", format!("prefix {}x{}", qf.factors.len() + 1, input.ftilde_candidates().len() + 1));
            t.push("factorization_complete", input.grp.is_complete());
            VerdictTag::Undecided
        }
    };
    Ok(Verdict { q: input.q, m: input.m, r: input.r, k: input.k, tag, transcript: t })
}

fn override_verdict(input: &CriterionInput, ov: &SieveOverride) -> Result<Verdict, CriteriaError> {
    let (qf, _) = input.q_part();
    let kept: Vec<BigUint> = qf.factors.iter().map(|(p, _)| p.clone()).filter(|p| (&ov.e % p).is_zero()).collect();
    let cfg = SieveConfig::new(input, &kept, &ov.f)?;
    let (main_ok, mut t) = main_inequality(input, &input.grp, &input.all_factors())?;
    let (ok, st) = sieve_inequality(input, &cfg)?;
    t.push("stage", "sieve_override");
    for (k, v) in st.entries().iter().skip(HEAD_KEYS) {
        t.push(&format!("sieve.{k}"), v);
    }
    let tag = if main_ok {
        VerdictTag::ProvenMain
    } else if ok {
        VerdictTag::ProvenSieve { config: cfg }
    } else {
        VerdictTag::Undecided
    };
    Ok(Verdict { q: input.q, m: input.m, r: input.r, k: input.k, tag, transcript: t })
}

/// (r·2^{m−k}·C_R)^{2R/((m−2k−4)R−2m)}: every q above it satisfies the main
/// inequality after W(n) < C_R·n^{1/R} and W(f̃) ≤ 2^{m−k}. None when the
/// exponent's denominator is not positive.
pub fn closed_form_threshold(m: u64, k: u64, r: u64, big_r: &Real, mode: CrMode<'_>) -> Option<Real> {
    let den = Real::from_i64(m as i64 - 2 * k as i64 - 4).mul(big_r).sub(&Real::from_u64(2 * m));
    if !den.is_positive() {
        return None;
    }
    let base = Real::from_u64(r)
        .mul(&Real::from_biguint(&(BigUint::one() << (m - k))))
        .mul(&c_r_constant(big_r, mode));
    Some(base.pow(&Real::from_u64(2).mul(big_r).div(&den)))
}

/// The published threshold rows: (R, q0, m0).
pub const PUBLISHED_TABLE1: [(&str, u64, u64); 8] = [
    ("8.5", 8, 175),
    ("7.7", 13, 64),
    ("7.5", 21, 39),
    ("7.5", 84, 22),
    ("7.5", 354, 17),
    ("7.5", 2747, 14),
    ("7.2", 8822, 13),
    ("7.2", 61429, 12),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub big_r: String,
    pub m0: u64,
    /// ⌈T(m0)⌉: every q ≥ q0 and m ≥ m0 passes.
    pub q0: u64,
    pub t_m0: String,
    /// T(m) ≤ T(m0) for m0 ≤ m ≤ `checked_to`, and the limit as m → ∞ is below q0.
    pub nonincreasing: bool,
    pub checked_to: u64,
}

/// Row for the closed form at r = 3, k = 1 with worst-case C_R.
pub fn threshold_row(big_r: &str, m0: u64) -> Option<ThresholdRow> {
    threshold_row_rk(big_r, m0, 3, 1)
}

pub fn threshold_row_rk(big_r: &str, m0: u64, r: u64, k: u64) -> Option<ThresholdRow> {
    let br = Real::parse(big_r)?;
    let t0 = closed_form_threshold(m0, k, r, &br, CrMode::WorstCase)?;
    let q0 = t0.ceil_u64();
    let checked_to = m0 + 200;
    let mut ok = true;
    let mut prev = t0.clone();
    for m in m0 + 1..=checked_to {
        let t = closed_form_threshold(m, k, r, &br, CrMode::WorstCase)?;
        if t > prev {
            ok = false;
            break;
        }
        prev = t;
    }
    // limit: (r·2^{m−k}·C)^{2R/(m(R−2)−(2k+4)R)} → 2^{2R/(R−2)}
    let two = Real::from_u64(2);
    let lim = two.pow(&two.mul(&br).div(&br.sub(&two)));
    ok &= lim <= Real::from_u64(q0);
    Some(ThresholdRow { big_r: big_r.to_string(), m0, q0, t_m0: t0.sci(10), nonincreasing: ok, checked_to })
}

/// Table-2 regions implied by consecutive threshold rows: (q_hi exclusive, m_lo, m_hi exclusive), q ≥ 8.
pub fn table2_regions(rows: &[(&str, u64, u64)]) -> Vec<(u64, u64, u64)> {
    rows.windows(2).map(|w| (w[1].1, w[1].2, w[0].2)).collect()
}

/// Smallest m for which q^{m/2−k−2} > r·C_R·q^{m/R}·2^{3m/4} holds from m on:
/// log(r·C_R·q^{k+2}) / ((1/2 − 1/R) log q − (3/4) log 2). None when the slope is not positive.
pub fn small_q_m_bound(q: u64, big_r: &str, r: u64, k: u64) -> Option<Real> {
    let br = Real::parse(big_r)?;
    let half = Real::parse("0.5")?;
    let ln_q = Real::from_u64(q).ln();
    let slope = half
        .sub(&Real::from_u64(1).div(&br))
        .mul(&ln_q)
        .sub(&Real::parse("0.75")?.mul(&Real::from_u64(2).ln()));
    if !slope.is_positive() {
        return None;
    }
    let num = Real::from_u64(r)
        .mul(&c_r_constant(&br, CrMode::WorstCase))
        .mul(&Real::from_u64(q).powi((k + 2) as usize))
        .ln();
    Some(num.div(&slope))
}

/// The two closed-form cut-offs of the q = 2 argument at r = 3, k = 1:
/// m′ | 3 (δ = 1/2, Δ = 2, R = 3) and m′ ∤ 3 (Δ ≤ m, W(f̃) ≤ 2^{m/6}, R = 6).
/// Each is the least m0 with the bound holding for every m ≥ m0.
pub fn q2_cutoffs() -> (u64, u64) {
    let two = Real::from_u64(2);
    let c3 = c_r_constant(&Real::from_u64(3), CrMode::WorstCase);
    let c6 = c_r_constant(&Real::from_u64(6), CrMode::WorstCase);
    // 2^{m/2−3} > 12·C_3·2^{m/3}
    let first = |m: u64| {
        two.pow(&Real::from_i64(m as i64 - 18).div(&Real::from_u64(6))) > Real::from_u64(12).mul(&c3)
    };
    // 2^{m/2−3} > 3·C_6·2^{m/6}·2^{m/6}·m
    let second = |m: u64| {
        two.pow(&Real::from_i64(m as i64 - 18).div(&Real::from_u64(6))) > Real::from_u64(3 * m).mul(&c6)
    };
    let least = |f: &dyn Fn(u64) -> bool| {
        let mut m0 = 4096;
        while m0 > 1 && f(m0 - 1) {
            m0 -= 1;
        }
        m0
    };
    (least(&first), least(&second))
}

/// One round of the generic ω-cap reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaStep {
    /// ω(q^m − 1) ≤ cap for every pair still open.
    pub cap: usize,
    pub kept: usize,
    pub s1: usize,
    pub last_dropped: u64,
    pub delta: String,
    pub big_delta: String,
    pub t: String,
    /// ω bound implied by q^m > T^expo: one less than the least t with primorial(t) > T^expo.
    pub next_cap: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerMBound {
    pub m: u64,
    /// T_printed^{2/(m−2k−4)}: pairs with q above it are settled.
    pub q_bound: String,
    /// ⌊q_bound⌋, the form in which the bounds are quoted.
    pub quoted: u64,
    /// Exclusive scan limit covering every q ≤ q_bound.
    pub scan_limit: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaReport {
    pub m_lo: u64,
    pub m_hi: u64,
    pub exponent: String,
    pub steps: Vec<OmegaStep>,
    pub t_final: String,
    /// T_final rounded up to three significant digits.
    pub t_printed: String,
    pub per_m: Vec<PerMBound>,
}

struct OmegaIter {
    primes: Vec<u64>,
    ln_prefix: Vec<Real>,
}

impl OmegaIter {
    fn new(n: usize) -> Self {
        let primes: Vec<u64> = small_primes().iter().take(n + 1).map(|&p| p as u64).collect();
        let mut ln_prefix = vec![Real::from_u64(0)];
        for &p in &primes {
            let next = ln_prefix.last().unwrap().add(&Real::from_u64(p).ln());
            ln_prefix.push(next);
        }
        OmegaIter { primes, ln_prefix }
    }

    /// (δ, Δ, T) dropping primes[kept..cap].
    fn step(&self, cap: usize, kept: usize, r: u64, wf: usize) -> (Real, Real, Real) {
        let mut delta = Real::from_u64(1);
        for &p in &self.primes[kept..cap] {
            delta = delta.sub(&Real::from_u64(1).div(&Real::from_u64(p)));
        }
        let s1 = cap - kept;
        let big = Real::from_i64(s1 as i64 - 1).div(&delta).add(&Real::from_u64(2));
        let t = Real::from_u64(r).mul(&Real::from_biguint(&(BigUint::one() << (kept + wf)))).mul(&big);
        (delta, big, t)
    }

    fn next_cap(&self, ln_bound: &Real) -> usize {
        let i = self.ln_prefix.partition_point(|v| v <= ln_bound);
        assert!(i < self.ln_prefix.len(), "prime table too short for the omega cap");
        i - 1
    }
}

/// Generic ω-cap iteration for m_lo ≤ m ≤ m_hi. Starting from ω(q^m − 1) ≤
/// `initial_cap`, each round keeps the smallest primes (the first round keeps
/// `first_kept`, later rounds the fewest that make δ positive), drops the next
/// ones as the worst case, and turns q^{m/2−k−2} > T into q^m > T^expo and then
/// into a smaller ω cap. Stops when the cap no longer drops.
pub fn omega_threshold_bound(m_lo: u64, m_hi: u64, r: u64, k: u64, initial_cap: usize, first_kept: usize) -> OmegaReport {
    assert!(m_lo > 2 * k + 4 && m_lo <= m_hi);
    let wf = (m_hi - k) as usize;
    let expo = Real::from_u64(2 * m_lo).div(&Real::from_u64(m_lo - 2 * k - 4));
    let it = OmegaIter::new(initial_cap + 64);
    let mut steps = Vec::new();
    let mut cap = initial_cap;
    let mut first = true;
    let t_final = loop {
        let kept = if first {
            first_kept
        } else {
            (0..cap).find(|&kp| it.step(cap, kp, r, wf).0.is_positive()).unwrap_or(cap)
        };
        first = false;
        let (delta, big, t) = it.step(cap, kept, r, wf);
        let next_cap = it.next_cap(&t.ln().mul(&expo));
        steps.push(OmegaStep {
            cap,
            kept,
            s1: cap - kept,
            last_dropped: if cap > kept { it.primes[cap - 1] } else { 0 },
            delta: delta.sci(12),
            big_delta: big.sci(12),
            t: t.sci(12),
            next_cap,
        });
        if next_cap >= cap {
            break t;
        }
        cap = next_cap;
    };
    let t_printed = t_final.sci_rounded(3, Ordering::Greater);
    let tp = Real::parse(&t_printed.replace('e', "e+").replace("e+-", "e-")).expect("printed bound parses");
    let per_m = (m_lo..=m_hi)
        .map(|m| {
            let b = tp.pow(&Real::from_u64(2).div(&Real::from_u64(m - 2 * k - 4)));
            PerMBound { m, q_bound: b.sci(12), quoted: b.floor_u64(), scan_limit: b.floor_u64() + 1 }
        })
        .collect();
    OmegaReport { m_lo, m_hi, exponent: expo.sci(6), steps, t_final: t_final.sci(12), t_printed, per_m }
}

/// How a round bounds ω(Q) from a q bound: the coarse count over all primes
/// with product ≤ qb^6, or the tighter count over 7 and primes ≡ 1 mod 7 with
/// product ≤ qb^6·(1 + 2/qb).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapRule {
    AllPrimes,
    SevenAdic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct M7Step {
    pub s1: usize,
    #[serde(with = "ratio")]
    pub delta: BigRational,
    #[serde(with = "ratio", rename = "Delta")]
    pub big_delta: BigRational,
    pub t: String,
    /// T²: q above it is settled.
    pub q_bound: String,
    pub q_bound_floor: u64,
    /// ω(Q) cap implied by q ≤ q_bound.
    pub next_s1: usize,
}

/// The two m = 7 cases, split by gcd(q − 1, Φ_7(q)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum M7Case {
    /// gcd = 1: e = gcd(Q, 7·29·43).
    Coprime,
    /// gcd = 7: 7 ∤ Q and e = gcd(Q, 29·43·71).
    SevenInGcd,
}

impl M7Case {
    fn kept(self) -> &'static [u64] {
        match self {
            M7Case::Coprime => &[7, 29, 43],
            M7Case::SevenInGcd => &[29, 43, 71],
        }
    }
}

/// gcd(q − 1, Φ_7(q)) = 1 case of [`m7_bound`].
pub fn m7_case1_bound(first_s1: usize, q_lo: u64, rounds: usize, rule: CapRule) -> Vec<M7Step> {
    m7_bound(M7Case::Coprime, first_s1, q_lo, rounds, rule)
}

/// Every prime of Q is 7 or ≡ 1 mod 7. With W(e) ≤ 8, f = 1 (W(f̃) = 1, s₂ ≤ 7,
/// 1/q^{deg} ≤ 1/q_lo), the dropped primes are taken as the smallest primes ≡ 1 mod 7
/// outside e. Each round turns the bound on q into a cap on ω(Q) for the next.
pub fn m7_bound(case: M7Case, first_s1: usize, q_lo: u64, rounds: usize, rule: CapRule) -> Vec<M7Step> {
    let s7: Vec<u64> = std::iter::once(7)
        .chain(small_primes().iter().map(|&p| p as u64).filter(|p| p % 7 == 1))
        .collect();
    let drops: Vec<u64> = s7.iter().copied().filter(|p| *p != 7 && !case.kept().contains(p)).collect();
    let all: Vec<u64> = small_primes().iter().map(|&p| p as u64).collect();
    let mut out = Vec::new();
    let mut s1 = first_s1;
    for _ in 0..rounds {
        let mut delta = BigRational::one() - BigRational::new(BigInt::from(7), BigInt::from(q_lo));
        for &p in &drops[..s1] {
            delta -= BigRational::new(BigInt::one(), BigInt::from(p));
        }
        let big = big_delta_of(s1 + 7, &delta);
        let t = Real::from_u64(24).mul(&Real::from_ratio(&big));
        let qb = t.mul(&t);
        let ln_cap = match rule {
            CapRule::AllPrimes => qb.ln().mul(&Real::from_u64(6)),
            CapRule::SevenAdic => {
                qb.ln().mul(&Real::from_u64(6)).add(&Real::from_u64(1).add(&Real::from_u64(2).div(&qb)).ln())
            }
        };
        let pool = if rule == CapRule::AllPrimes { &all } else { &s7 };
        let mut acc = Real::from_u64(0);
        let mut next = 0;
        for &p in pool {
            let a = acc.add(&Real::from_u64(p).ln());
            if a > ln_cap {
                break;
            }
            acc = a;
            next += 1;
        }
        out.push(M7Step {
            s1,
            delta,
            big_delta: big,
            t: t.sci(12),
            q_bound: qb.sci(12),
            q_bound_floor: qb.floor_u64(),
            next_s1: next,
        });
        if next >= s1 {
            break;
        }
        s1 = next;
    }
    out
}

/// Exact decimal comparison helper for tests and reports: is x > v (v a decimal literal)?
pub fn real_gt(x: &Real, v: &str) -> bool {
    Real::parse(v).map(|y| *x > y).unwrap_or(false)
}

/// Exact rational to Real.
pub fn ratio_real(r: &BigRational) -> Real {
    Real::from_ratio(r)
}

/// Convenience: gcd of an integer with the group order, as a factorization.
pub fn restrict(grp: &IntFactorization, e: &BigUint) -> IntFactorization {
    grp.restrict_to_divisor_of(&e.gcd(&grp.n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(q: u64, m: u64) -> CriterionInput {
        let grp = factor_q_pow_m_minus_1(q, m, &FactorBudget::default(), true);
        CriterionInput::standard(q, m, 3, 1, grp).unwrap()
    }

    #[test]
    fn empty_sieve_matches_main() {
        let inp = input(4, 18);
        let (qf, _) = inp.q_part();
        let cfg = SieveConfig::prefix(&inp, qf.factors.len(), inp.ftilde_candidates().len()).unwrap();
        assert_eq!(cfg.delta, BigRational::one());
        assert_eq!(cfg.big_delta, BigRational::one());
        let (a, ta) = main_inequality(&inp, &inp.grp, &inp.all_factors()).unwrap();
        let (b, tb) = sieve_inequality(&inp, &cfg).unwrap();
        assert_eq!(a, b);
        for key in ["lhs", "rhs", "W_e", "W_ftilde", "holds"] {
            assert_eq!(ta.get(key), tb.get(key), "{key}");
        }
    }

    #[test]
    fn sieve_lists_small_q() {
        let exc = |q: u64, hi: u64| -> Vec<u64> {
            (7..hi)
                .filter(|&m| divides_q_pow_m_minus_1(q, m, 3))
                .filter(|&m| {
                    let v = criteria_verdict(q, m, 3, 1, &CriteriaOptions::default()).unwrap();
                    v.is_undecided()
                })
                .collect()
        };
        assert_eq!(exc(4, 40), vec![7, 8, 9, 10, 12]);
        assert_eq!(exc(5, 40), vec![8, 10, 12]);
        assert_eq!(exc(7, 40), vec![7, 8, 9, 12]);
        assert_eq!(exc(2, 40), vec![8, 10, 12, 14, 16, 18]);
    }

    #[test]
    fn precondition_and_stage() {
        let v = criteria_verdict(2, 7, 3, 1, &CriteriaOptions::default()).unwrap();
        assert_eq!(v.name(), "PreconditionFail");
        let v = criteria_verdict(5, 16, 3, 1, &CriteriaOptions::default()).unwrap();
        assert_eq!(v.name(), "ProvenSieve");
        let v = criteria_verdict(4, 8, 3, 1, &CriteriaOptions::default()).unwrap();
        assert!(v.is_undecided());
        assert!(matches!(criteria_verdict(6, 7, 3, 1, &CriteriaOptions::default()), Err(CriteriaError::Field(_))));
    }

    #[test]
    fn q2_preset_delta() {
        // m' = 3: e = Q, f = x^2 + x + 1, and x − 1 (still in (x^m − 1)/g since 2 | m) is dropped
        let inp = input(2, 12);
        let (qf, _) = inp.q_part();
        let kept: Vec<BigUint> = qf.factors.iter().map(|(p, _)| p.clone()).collect();
        let quad: Vec<usize> = (0..inp.factors.len()).filter(|&i| inp.factors[i].degree == 2).collect();
        let cfg = SieveConfig::new(&inp, &kept, &quad).unwrap();
        assert_eq!((cfg.s1, cfg.s2), (0, 1));
        assert_eq!(cfg.delta, BigRational::new(1.into(), 2.into()));
        assert_eq!(cfg.big_delta, BigRational::from_integer(2.into()));
    }

    #[test]
    fn table_rows() {
        for (r, q0, m0) in PUBLISHED_TABLE1 {
            let row = threshold_row(r, m0).unwrap();
            assert_eq!(row.q0, q0, "R = {r}");
            assert!(row.nonincreasing);
        }
        assert!(threshold_row("3", 6).is_none());
    }

    #[test]
    fn omega_iteration_constants() {
        let rep = omega_threshold_bound(7, 11, 3, 1, 9631, 18);
        let s0 = &rep.steps[0];
        assert_eq!((s0.s1, s0.last_dropped, s0.next_cap), (9613, 100483, 96));
        assert!(s0.delta.starts_with("8.1958"));
        assert_eq!(rep.t_printed, "2.75e7");
        let quoted: Vec<(u64, u64)> = rep.per_m.iter().map(|b| (b.m, b.quoted)).collect();
        assert_eq!(&quoted[2..], &[(9, 91107), (10, 5244), (11, 945)]);
        assert_eq!(rep.per_m[1].scan_limit, 27_500_001);
    }

    #[test]
    fn m7_case1_rounds() {
        let st = m7_case1_bound(54, 100_000, 2, CapRule::AllPrimes);
        assert_eq!(st[0].q_bound_floor, 2_702_025);
        let c2 = m7_bound(M7Case::SevenInGcd, 54, 100_000, 2, CapRule::AllPrimes);
        assert!(c2[1].q_bound_floor < st[1].q_bound_floor);
        assert_eq!(st[1].q_bound_floor, 780_097);
        let tight = m7_case1_bound(54, 100_000, 3, CapRule::SevenAdic);
        assert!(tight[2].q_bound_floor < st[1].q_bound_floor);
    }

    #[test]
    fn small_q_and_q2_cutoffs() {
        let m = |q, r| small_q_m_bound(q, r, 3, 1).unwrap().floor_u64() + 1;
        assert_eq!(m(4, "10.3"), 757);
        assert_eq!(m(5, "8.4"), 172);
        assert_eq!(m(7, "8.2"), 75);
        assert_eq!(q2_cutoffs(), (49, 99));
    }
}
