//! Characters of small fields and the characteristic-function sums built from them.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::arith::{mobius, IntFactorization};
use crate::field::{FFElem, FieldCtx, FieldError};
use crate::freeness::{first_primitive, ActionMatrix, FreenessError};
use crate::poly::{factor_xm_minus_1, mobius_q, phi_q, Poly, PolyFactorization, DEFAULT_DIVISOR_CAP};

/// Largest field handled here.
pub const CHAR_FIELD_LIMIT: u64 = 1 << 16;
/// Characteristic-function values must be this close to 0 or 1.
pub const CHAR_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharError {
    #[error("field of {0} elements is above the character-table limit")]
    FieldTooLarge(u64),
    #[error("not a divisor")]
    NotADivisor,
    #[error("character index out of range")]
    BadIndex,
    #[error("character sum {0} is not within tolerance of 0 or 1")]
    NonBinaryValue(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Freeness(#[from] FreenessError),
}

/// ψ(g^t) = exp(2πi·j·t/(q^m−1)).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultChar {
    pub j: u64,
    pub order: u64,
}

/// λ(x) = exp(2πi·AbsTr(θx)/p), θ given by rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddChar {
    pub theta: u32,
}

pub fn root_of_unity(num: u64, den: u64) -> Complex64 {
    let t = TAU * ((num % den) as f64) / den as f64;
    Complex64::new(t.cos(), t.sin())
}

/// Character data for one field of at most 2^16 elements.
pub struct CharCtx<'a> {
    pub ctx: &'a FieldCtx,
    pub generator: FFElem,
    n: u64,
    p: u64,
    /// dlog[rank] for nonzero elements.
    dlog: Vec<u32>,
    /// exp_rank[t] = rank of g^t.
    exp_rank: Vec<u32>,
    abs_tr: Vec<u32>,
    xm1: PolyFactorization,
    divisors: Vec<PolyFactorization>,
    char_orders: OnceLock<Vec<usize>>,
}

impl<'a> CharCtx<'a> {
    pub fn new(ctx: &'a FieldCtx) -> Result<Self, CharError> {
        let size = ctx.size_u64().filter(|&n| n <= CHAR_FIELD_LIMIT).ok_or_else(|| {
            CharError::FieldTooLarge(ctx.size_u64().unwrap_or(u64::MAX))
        })?;
        let generator = first_primitive(ctx)?;
        let n = size - 1;
        let mut dlog = vec![u32::MAX; size as usize];
        let mut exp_rank = vec![0u32; n as usize];
        let mut cur = ctx.one().coeffs().to_vec();
        for t in 0..n {
            let r = rank_raw(ctx, &cur);
            dlog[r as usize] = t as u32;
            exp_rank[t as usize] = r as u32;
            cur = ctx.mul_raw(&cur, generator.coeffs());
        }
        let f = ctx.base();
        let abs_tr = ctx.enumerate()?.map(|x| f.abs_trace(ctx.trace_raw(x.coeffs())) as u32).collect();
        let xm1 = factor_xm_minus_1(f, ctx.m());
        let divisors = xm1.divisors_factored(f, DEFAULT_DIVISOR_CAP).map_err(|_| CharError::NotADivisor)?;
        Ok(CharCtx {
            ctx,
            generator,
            n,
            p: f.p(),
            dlog,
            exp_rank,
            abs_tr,
            xm1,
            divisors,
            char_orders: OnceLock::new(),
        })
    }

    pub fn group_order(&self) -> u64 {
        self.n
    }

    pub fn rank(&self, x: &FFElem) -> u32 {
        rank_raw(self.ctx, x.coeffs()) as u32
    }

    pub fn dlog(&self, x: &FFElem) -> Option<u64> {
        let d = self.dlog[self.rank(x) as usize];
        (d != u32::MAX).then_some(d as u64)
    }

    /// Baby-step giant-step discrete log, independent of the precomputed table.
    pub fn dlog_bsgs(&self, x: &FFElem) -> Option<u64> {
        if x.is_zero() {
            return None;
        }
        let ctx = self.ctx;
        let s = (self.n as f64).sqrt().ceil() as u64;
        let mut baby = HashMap::with_capacity(s as usize);
        let mut cur = ctx.one().coeffs().to_vec();
        for j in 0..s {
            baby.entry(cur.clone()).or_insert(j);
            cur = ctx.mul_raw(&cur, self.generator.coeffs());
        }
        let giant = ctx.inv(&ctx.elem(cur).ok()?).ok()?;
        let mut gamma = x.coeffs().to_vec();
        for i in 0..=s {
            if let Some(&j) = baby.get(&gamma) {
                return Some((i * s + j) % self.n);
            }
            gamma = ctx.mul_raw(&gamma, giant.coeffs());
        }
        None
    }

    /// The `index`-th character of exact order d (0 ≤ index < φ(d)).
    pub fn mult_char(&self, d: u64, index: u64) -> Result<MultChar, CharError> {
        if d == 0 || self.n % d != 0 {
            return Err(CharError::NotADivisor);
        }
        let t = (0..d).filter(|t| t.gcd(&d) == 1).nth(index as usize).ok_or(CharError::BadIndex)?;
        Ok(MultChar { j: (self.n / d) * t, order: d })
    }

    /// All characters of exact order d.
    pub fn mult_chars_of_order(&self, d: u64) -> Result<Vec<MultChar>, CharError> {
        if d == 0 || self.n % d != 0 {
            return Err(CharError::NotADivisor);
        }
        Ok((0..d).filter(|t| t.gcd(&d) == 1).map(|t| MultChar { j: (self.n / d) * t, order: d }).collect())
    }

    pub fn eval_mult(&self, psi: MultChar, x: &FFElem) -> Option<Complex64> {
        self.dlog(x).map(|t| root_of_unity(psi.j * t, self.n))
    }

    pub fn add_char(&self, theta: &FFElem) -> AddChar {
        AddChar { theta: self.rank(theta) }
    }

    /// AbsTr(θx) via discrete logs.
    fn abs_tr_product(&self, theta: u32, x: u32) -> u32 {
        if theta == 0 || x == 0 {
            return 0;
        }
        let t = (self.dlog[theta as usize] as u64 + self.dlog[x as usize] as u64) % self.n;
        self.abs_tr[self.exp_rank[t as usize] as usize]
    }

    pub fn eval_add_rank(&self, lam: AddChar, x: u32) -> Complex64 {
        root_of_unity(self.abs_tr_product(lam.theta, x) as u64, self.p)
    }

    pub fn eval_add(&self, lam: AddChar, x: &FFElem) -> Complex64 {
        self.eval_add_rank(lam, self.rank(x))
    }

    /// F_p-basis of F_{q^m}: u^i y^j.
    fn fp_basis(&self) -> Vec<FFElem> {
        let ctx = self.ctx;
        let f = ctx.base();
        let s = f.pp.s as usize;
        let mut out = Vec::new();
        for j in 0..ctx.m() {
            for i in 0..s {
                let mut d = vec![0u32; s];
                d[i] = 1;
                let mut c = vec![0u32; ctx.m()];
                c[j] = f.from_digits(&d);
                out.push(ctx.elem(c).expect("basis element"));
            }
        }
        out
    }

    /// Is λ∘g trivial, i.e. λ(g∘ξ) = 1 for all ξ? Checked on an F_p-basis.
    fn composed_trivial(&self, lam: AddChar, g: &Poly, basis: &[FFElem]) -> bool {
        let a = ActionMatrix::of_poly(self.ctx, g);
        basis.iter().all(|b| {
            let v = a.apply(self.ctx, b.coeffs());
            self.abs_tr_product(lam.theta, rank_raw(self.ctx, &v) as u32) == 0
        })
    }

    /// Least-degree monic divisor g of x^m − 1 with λ∘g trivial.
    pub fn fq_order_of_char(&self, lam: AddChar) -> Poly {
        self.divisors[self.char_order_index(lam)].base.clone()
    }

    fn char_order_index(&self, lam: AddChar) -> usize {
        self.char_orders.get_or_init(|| {
            let basis = self.fp_basis();
            let size = self.n as u32 + 1;
            (0..size)
                .map(|t| {
                    let l = AddChar { theta: t };
                    self.divisors
                        .iter()
                        .position(|g| self.composed_trivial(l, &g.base, &basis))
                        .expect("x^m - 1 kills every character")
                })
                .collect()
        })[lam.theta as usize]
    }

    pub fn divisors(&self) -> &[PolyFactorization] {
        &self.divisors
    }

    pub fn xm1(&self) -> &PolyFactorization {
        &self.xm1
    }

    /// Additive characters of F_q-order exactly h.
    pub fn add_chars_of_order(&self, h: &Poly) -> Vec<AddChar> {
        let Some(idx) = self.divisors.iter().position(|d| &d.base == h) else {
            return Vec::new();
        };
        (0..=self.n as u32).map(|t| AddChar { theta: t }).filter(|&l| self.char_order_index(l) == idx).collect()
    }

    /// θ(e) Σ_{d|e} μ(d)/φ(d) Σ_{ψ_d} ψ_d(ξ).
    pub fn rho_char(&self, x: &FFElem, e: &IntFactorization) -> Result<f64, CharError> {
        self.ctx.check(x)?;
        if x.is_zero() {
            return Err(FreenessError::ZeroElement.into());
        }
        let e_n = e.n.to_u64().ok_or(CharError::NotADivisor)?;
        if self.n % e_n != 0 {
            return Err(CharError::NotADivisor);
        }
        let theta_e = e.euler_phi().and_then(|v| v.to_f64()).ok_or(CharError::NotADivisor)? / e_n as f64;
        let mut total = Complex64::new(0.0, 0.0);
        for d in e.divisors().map_err(|_| CharError::NotADivisor)? {
            let d = d.to_u64().expect("small divisor");
            let mu = mobius(d);
            if mu == 0 {
                continue;
            }
            let phi_d = euler_phi_u64(d) as f64;
            let inner: Complex64 =
                self.mult_chars_of_order(d)?.iter().map(|&psi| self.eval_mult(psi, x).expect("nonzero")).sum();
            total += inner * (mu as f64 / phi_d);
        }
        binary(total * theta_e)
    }

    /// Θ(f) Σ_{h|f} μ_q(h)/Φ_q(h) Σ_{λ_h} λ_h(ξ).
    pub fn kappa_char(&self, x: &FFElem, fpoly: &Poly) -> Result<f64, CharError> {
        self.ctx.check(x)?;
        let fb = self.ctx.base();
        let ffac = self.xm1.factor_divisor(fpoly, fb).map_err(|_| CharError::NotADivisor)?;
        let q = fb.q();
        let theta = crate::poly::theta_q(&ffac, q);
        let theta = theta.numer().to_f64().unwrap_or(f64::NAN) / theta.denom().to_f64().unwrap_or(f64::NAN);
        let xr = self.rank(x);
        let mut total = Complex64::new(0.0, 0.0);
        for h in ffac.divisors_factored(fb, DEFAULT_DIVISOR_CAP).map_err(|_| CharError::NotADivisor)? {
            let mu = mobius_q(&h);
            if mu == 0 {
                continue;
            }
            let phi = phi_q(&h, q).to_f64().expect("small");
            let inner: Complex64 = self.add_chars_of_order(&h.base).iter().map(|&l| self.eval_add_rank(l, xr)).sum();
            total += inner * (mu as f64 / phi);
        }
        binary(total * theta)
    }

    /// Canonical additive character of F_q at z: exp(2πi·AbsTr_{F_q/F_p}(z)/p).
    fn base_add(&self, z: u32) -> Complex64 {
        root_of_unity(self.ctx.base().abs_trace(z), self.p)
    }

    /// (1/q) Σ_{λ ∈ F_q^} λ(Tr(ξ) − a).
    pub fn tau_char(&self, x: &FFElem, a: u32) -> Result<f64, CharError> {
        self.ctx.check(x)?;
        let f = self.ctx.base();
        let z = f.sub(self.ctx.trace_raw(x.coeffs()), a);
        let q = f.q() as u32;
        let total: Complex64 = (0..q).map(|u| self.base_add(f.mul(u, z))).sum();
        binary(total / q as f64)
    }

    /// (1/(q−1)) Σ_{ψ ∈ (F_q^*)^} ψ(N(ξ)c^{-1}).
    pub fn eta_char(&self, x: &FFElem, c: u32) -> Result<f64, CharError> {
        self.ctx.check(x)?;
        if x.is_zero() {
            return Err(FreenessError::ZeroElement.into());
        }
        let f = self.ctx.base();
        let z = f.mul(self.ctx.norm_raw(x.coeffs()), f.inv(c)?);
        let qm1 = f.q() - 1;
        let t = f.tables();
        let lz = t.log[z as usize] as u64;
        let total: Complex64 = (0..qm1).map(|j| root_of_unity(j * lz, qm1)).sum();
        binary(total / qm1 as f64)
    }

    /// (1/q^m) Σ_λ λ(ξ).
    pub fn i0_char(&self, x: &FFElem) -> Result<f64, CharError> {
        self.ctx.check(x)?;
        let xr = self.rank(x);
        let size = self.n + 1;
        let total: Complex64 = (0..size as u32).map(|t| self.eval_add_rank(AddChar { theta: t }, xr)).sum();
        binary(total / size as f64)
    }

    /// (1/q^m) Σ_β λ(β)·Ω(g∘β)^{-1}.
    pub fn lemma25_sum(&self, g: &Poly, lam: AddChar, omega: AddChar) -> Result<f64, CharError> {
        self.xm1.exponents_of(g, self.ctx.base()).map_err(|_| CharError::NotADivisor)?;
        let a = ActionMatrix::of_poly(self.ctx, g);
        let mut total = Complex64::new(0.0, 0.0);
        for b in self.ctx.enumerate()? {
            let gb = rank_raw(self.ctx, &a.apply(self.ctx, b.coeffs())) as u32;
            total += self.eval_add_rank(lam, self.rank(&b)) * self.eval_add_rank(omega, gb).conj();
        }
        binary(total / (self.n + 1) as f64)
    }

    /// Does λ equal g∘Ω, i.e. λ(ξ) = Ω(g∘ξ) for all ξ?
    pub fn is_composition(&self, g: &Poly, lam: AddChar, omega: AddChar) -> bool {
        let a = ActionMatrix::of_poly(self.ctx, g);
        self.fp_basis().iter().all(|b| {
            let gb = rank_raw(self.ctx, &a.apply(self.ctx, b.coeffs())) as u32;
            self.abs_tr_product(lam.theta, self.rank(b)) == self.abs_tr_product(omega.theta, gb)
        })
    }

    /// |{Ω : λ = g∘Ω}|.
    pub fn preimage_count(&self, g: &Poly, lam: AddChar) -> usize {
        (0..=self.n as u32).filter(|&t| self.is_composition(g, lam, AddChar { theta: t })).count()
    }
}

fn rank_raw(ctx: &FieldCtx, c: &[u32]) -> u64 {
    let q = ctx.q();
    c.iter().fold(0u64, |acc, &v| acc * q + v as u64)
}

fn euler_phi_u64(n: u64) -> u64 {
    crate::arith::factor_u64(n).iter().map(|&(p, e)| p.pow(e - 1) * (p - 1)).product()
}

/// Real part of a sum that must be 0 or 1.
fn binary(z: Complex64) -> Result<f64, CharError> {
    let near = |t: f64| (z.re - t).abs() < CHAR_TOL && z.im.abs() < CHAR_TOL;
    if near(0.0) || near(1.0) {
        Ok(z.re)
    } else {
        Err(CharError::NonBinaryValue(z.re))
    }
}

pub fn as_bool(v: f64) -> bool {
    v > 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dlog_table_matches_bsgs() {
        let ctx = FieldCtx::new(3, 3).unwrap();
        let cc = CharCtx::new(&ctx).unwrap();
        for x in ctx.enumerate().unwrap().skip(1) {
            assert_eq!(cc.dlog(&x), cc.dlog_bsgs(&x));
        }
    }

    #[test]
    fn orthogonality_and_quadratic_char() {
        let ctx = FieldCtx::new(2, 4).unwrap();
        let cc = CharCtx::new(&ctx).unwrap();
        for d in [3u64, 5, 15] {
            for psi in cc.mult_chars_of_order(d).unwrap() {
                let s: Complex64 = ctx.enumerate().unwrap().skip(1).map(|x| cc.eval_mult(psi, &x).unwrap()).sum();
                assert!(s.norm() < 1e-9);
            }
        }
        let f9 = FieldCtx::new(3, 2).unwrap();
        let cc9 = CharCtx::new(&f9).unwrap();
        let psi = cc9.mult_char(2, 0).unwrap();
        for x in f9.enumerate().unwrap().skip(1) {
            let is_square = f9.enumerate().unwrap().any(|y| f9.mul(&y, &y).unwrap() == x);
            let v = cc9.eval_mult(psi, &x).unwrap();
            assert!((v.re - if is_square { 1.0 } else { -1.0 }).abs() < 1e-9);
        }
        assert_eq!(cc.mult_char(7, 0), Err(CharError::NotADivisor));
    }

    #[test]
    fn additive_examples() {
        let ctx = FieldCtx::new(2, 3).unwrap();
        let cc = CharCtx::new(&ctx).unwrap();
        for th in ctx.enumerate().unwrap().skip(1) {
            let lam = cc.add_char(&th);
            let s: Complex64 = ctx.enumerate().unwrap().map(|x| cc.eval_add(lam, &x)).sum();
            assert!(s.norm() < 1e-9);
        }
        let mut hist: Vec<(Poly, usize)> = Vec::new();
        for th in ctx.enumerate().unwrap() {
            let o = cc.fq_order_of_char(cc.add_char(&th));
            match hist.iter_mut().find(|(p, _)| *p == o) {
                Some((_, n)) => *n += 1,
                None => hist.push((o, 1)),
            }
        }
        hist.sort();
        let counts: Vec<usize> = hist.iter().map(|(_, n)| *n).collect();
        assert_eq!(counts, vec![1, 1, 3, 3]);
    }

    #[test]
    fn i0_and_tau() {
        let ctx = FieldCtx::new(3, 2).unwrap();
        let cc = CharCtx::new(&ctx).unwrap();
        assert!((cc.i0_char(&ctx.zero()).unwrap() - 1.0).abs() < 1e-9);
        assert!(cc.i0_char(&ctx.one()).unwrap().abs() < 1e-9);
        for x in ctx.enumerate().unwrap() {
            for a in 0..3 {
                assert_eq!(as_bool(cc.tau_char(&x, a).unwrap()), ctx.trace(&x).unwrap() == a);
            }
        }
    }

    #[test]
    fn too_large() {
        let ctx = FieldCtx::new(2, 17).unwrap();
        assert!(matches!(CharCtx::new(&ctx), Err(CharError::FieldTooLarge(_))));
    }
}
