use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{BaseField, FieldError};
use crate::arith::{factor_q_pow_m_minus_1, FactorBudget, IntFactorization};
use crate::poly::{first_irreducible, Poly};

/// Enumeration is refused above this many elements unless raised explicitly.
pub const DEFAULT_ENUM_CEILING: u64 = 1 << 28;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldId(u64);

/// An element of F_{q^m}: m coefficients over F_q (F_q ranks), constant first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FFElem {
    id: FieldId,
    c: Vec<u32>,
}

impl FFElem {
    pub fn coeffs(&self) -> &[u32] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn field_id(&self) -> FieldId {
        self.id
    }
}

/// The tower F_p ⊂ F_q ⊂ F_{q^m} = F_q[y]/(h).
#[derive(Debug)]
pub struct FieldCtx {
    base: Arc<BaseField>,
    m: usize,
    top: Poly,
    /// −h_j for j < m, so y^m = Σ neg_top[j] y^j.
    neg_top: Vec<u32>,
    id: FieldId,
    /// frob[j] = (y^j)^q.
    frob: Vec<Vec<u32>>,
    /// Tr(y^j) for j < m.
    trace_vec: Vec<u32>,
    order: BigUint,
    enum_ceiling: u64,
    lazy_prime_mul: bool,
    group: OnceLock<IntFactorization>,
}

impl FieldCtx {
    pub fn new(q: u64, m: usize) -> Result<Self, FieldError> {
        if m == 0 {
            return Err(FieldError::DegreeZero);
        }
        Self::with_base(Arc::new(BaseField::new(q)?), m)
    }

    pub fn with_base(base: Arc<BaseField>, m: usize) -> Result<Self, FieldError> {
        if m == 0 {
            return Err(FieldError::DegreeZero);
        }
        let f = &*base;
        let top = first_irreducible(f, m);
        let neg_top: Vec<u32> = (0..m).map(|j| f.neg(top.coeff(j))).collect();
        let order = BigUint::from(f.q()).pow(m as u32);
        let p = f.p() as u128;
        let lazy_prime_mul = f.is_prime_field() && (p - 1) * (p - 1) * (2 * m as u128 + 2) < u64::MAX as u128;
        let mut ctx = FieldCtx {
            base,
            m,
            top,
            neg_top,
            id: FieldId(NEXT_ID.fetch_add(1, Ordering::Relaxed)),
            frob: Vec::new(),
            trace_vec: Vec::new(),
            order,
            enum_ceiling: DEFAULT_ENUM_CEILING,
            lazy_prime_mul,
            group: OnceLock::new(),
        };
        ctx.build_maps();
        Ok(ctx)
    }

    pub fn with_enum_ceiling(mut self, ceiling: u64) -> Self {
        self.enum_ceiling = ceiling;
        self
    }

    fn build_maps(&mut self) {
        let m = self.m;
        let f = &*self.base;
        // powers y^0 … y^{2m−2} reduced, for the trace of multiplication maps
        let mut pows: Vec<Vec<u32>> = Vec::with_capacity(2 * m);
        let mut cur = vec![0u32; m];
        cur[0] = f.one();
        for _ in 0..2 * m - 1 {
            pows.push(cur.clone());
            cur = self.mul_by_y(&cur);
        }
        self.trace_vec = (0..m)
            .map(|j| (0..m).fold(0, |acc, i| f.add(acc, pows[i + j][i])))
            .collect();
        let y = Poly::monomial(1, f);
        let yq = y.powmod_u64(f.q(), &self.top, f);
        let yq = self.pad(yq.coeffs());
        let mut col = vec![0u32; m];
        col[0] = f.one();
        let mut frob = Vec::with_capacity(m);
        for _ in 0..m {
            frob.push(col.clone());
            col = self.mul_raw(&col, &yq);
        }
        self.frob = frob;
    }

    fn pad(&self, c: &[u32]) -> Vec<u32> {
        let mut v = c.to_vec();
        v.resize(self.m, 0);
        v
    }

    fn mul_by_y(&self, a: &[u32]) -> Vec<u32> {
        let f = &*self.base;
        let m = self.m;
        let top = a[m - 1];
        let mut out = vec![0u32; m];
        for j in (1..m).rev() {
            out[j] = a[j - 1];
        }
        if top != 0 {
            for (j, o) in out.iter_mut().enumerate() {
                *o = f.add(*o, f.mul(top, self.neg_top[j]));
            }
        }
        out
    }

    pub fn base(&self) -> &BaseField {
        &self.base
    }

    pub fn base_arc(&self) -> Arc<BaseField> {
        self.base.clone()
    }

    pub fn q(&self) -> u64 {
        self.base.q()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn id(&self) -> FieldId {
        self.id
    }

    pub fn top_modulus(&self) -> &Poly {
        &self.top
    }

    pub fn mid_modulus(&self) -> Option<&Poly> {
        self.base.mid_modulus()
    }

    /// q^m.
    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// q^m − 1.
    pub fn mult_order(&self) -> BigUint {
        &self.order - 1u32
    }

    pub fn enum_ceiling(&self) -> u64 {
        self.enum_ceiling
    }

    /// q^m as u64 when it fits.
    pub fn size_u64(&self) -> Option<u64> {
        self.order.to_u64()
    }

    pub fn is_enumerable(&self) -> bool {
        self.size_u64().is_some_and(|n| n <= self.enum_ceiling)
    }

    pub fn require_enumerable(&self) -> Result<u64, FieldError> {
        match self.size_u64() {
            Some(n) if n <= self.enum_ceiling => Ok(n),
            _ => Err(FieldError::FieldTooLarge(format!(
                "q^m = {}^{} exceeds the enumeration ceiling {}",
                self.q(),
                self.m,
                self.enum_ceiling
            ))),
        }
    }

    /// Complete factorization of q^m − 1, computed once.
    pub fn group_factorization(&self) -> &IntFactorization {
        self.group
            .get_or_init(|| factor_q_pow_m_minus_1(self.q(), self.m as u64, &FactorBudget::default(), true))
    }

    pub fn check(&self, x: &FFElem) -> Result<(), FieldError> {
        if x.id == self.id {
            Ok(())
        } else {
            Err(FieldError::CtxMismatch)
        }
    }

    fn wrap(&self, c: Vec<u32>) -> FFElem {
        FFElem { id: self.id, c }
    }

    pub fn zero(&self) -> FFElem {
        self.wrap(vec![0; self.m])
    }

    pub fn one(&self) -> FFElem {
        self.from_base(self.base.one())
    }

    pub fn from_base(&self, a: u32) -> FFElem {
        let mut c = vec![0; self.m];
        c[0] = a;
        self.wrap(c)
    }

    /// The class of y, the root of the top modulus.
    pub fn gen_y(&self) -> FFElem {
        if self.m == 1 {
            return self.from_base(self.base.neg(self.top.coeff(0)));
        }
        let mut c = vec![0; self.m];
        c[1] = self.base.one();
        self.wrap(c)
    }

    /// Element from coefficients (short vectors are zero-padded).
    pub fn elem(&self, c: Vec<u32>) -> Result<FFElem, FieldError> {
        let q = self.q();
        if c.len() > self.m || c.iter().any(|&x| x as u64 >= q) {
            return Err(FieldError::InvalidElement(format!("{c:?}")));
        }
        Ok(self.wrap(self.pad(&c)))
    }

    /// Coefficient of y^0 when x lies in F_q.
    pub fn as_base(&self, x: &FFElem) -> Option<u32> {
        x.c[1..].iter().all(|&v| v == 0).then_some(x.c[0])
    }

    /// Canonical rank: Σ c_j q^{m−1−j}, so the constant coefficient is most significant.
    pub fn rank(&self, x: &FFElem) -> Option<u64> {
        let q = self.q();
        x.c.iter().try_fold(0u64, |acc, &v| acc.checked_mul(q)?.checked_add(v as u64))
    }

    pub fn rank_big(&self, x: &FFElem) -> BigUint {
        let q = BigUint::from(self.q());
        x.c.iter().fold(BigUint::zero(), |acc, &v| acc * &q + v)
    }

    pub fn from_rank(&self, mut r: u64) -> FFElem {
        let q = self.q();
        let mut c = vec![0u32; self.m];
        for j in (0..self.m).rev() {
            c[j] = (r % q) as u32;
            r /= q;
        }
        self.wrap(c)
    }

    /// Every element once, in canonical rank order.
    pub fn enumerate(&self) -> Result<impl Iterator<Item = FFElem> + '_, FieldError> {
        let n = self.require_enumerable()?;
        Ok(self.range(0, n))
    }

    /// Elements with rank in [lo, hi), incrementing the coefficient vector in place.
    pub fn range(&self, lo: u64, hi: u64) -> impl Iterator<Item = FFElem> + '_ {
        let q = self.q() as u32;
        let mut cur = self.from_rank(lo).c;
        let mut left = hi.saturating_sub(lo);
        std::iter::from_fn(move || {
            if left == 0 {
                return None;
            }
            left -= 1;
            let out = self.wrap(cur.clone());
            for j in (0..cur.len()).rev() {
                cur[j] += 1;
                if cur[j] < q {
                    break;
                }
                cur[j] = 0;
            }
            Some(out)
        })
    }

    pub fn add(&self, a: &FFElem, b: &FFElem) -> Result<FFElem, FieldError> {
        self.check(a)?;
        self.check(b)?;
        let f = &*self.base;
        Ok(self.wrap(a.c.iter().zip(&b.c).map(|(&x, &y)| f.add(x, y)).collect()))
    }

    pub fn sub(&self, a: &FFElem, b: &FFElem) -> Result<FFElem, FieldError> {
        self.check(a)?;
        self.check(b)?;
        let f = &*self.base;
        Ok(self.wrap(a.c.iter().zip(&b.c).map(|(&x, &y)| f.sub(x, y)).collect()))
    }

    pub fn neg(&self, a: &FFElem) -> Result<FFElem, FieldError> {
        self.check(a)?;
        Ok(self.wrap(a.c.iter().map(|&x| self.base.neg(x)).collect()))
    }

    pub fn scale(&self, s: u32, a: &FFElem) -> Result<FFElem, FieldError> {
        self.check(a)?;
        Ok(self.wrap(a.c.iter().map(|&x| self.base.mul(s, x)).collect()))
    }

    pub fn mul(&self, a: &FFElem, b: &FFElem) -> Result<FFElem, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.mul_raw(&a.c, &b.c)))
    }

    /// Product of raw coefficient vectors of length m.
    pub fn mul_raw(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let m = self.m;
        if self.lazy_prime_mul {
            return self.mul_raw_prime(a, b);
        }
        let f = &*self.base;
        let mut t = vec![0u32; 2 * m - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    t[i + j] = f.add(t[i + j], f.mul(x, y));
                }
            }
        }
        for i in (m..2 * m - 1).rev() {
            let c = t[i];
            if c == 0 {
                continue;
            }
            for j in 0..m {
                t[i - m + j] = f.add(t[i - m + j], f.mul(c, self.neg_top[j]));
            }
        }
        t.truncate(m);
        t
    }

    /// Prime-field product with deferred reduction; bounded by the construction-time check.
    fn mul_raw_prime(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let m = self.m;
        let p = self.base.p();
        let mut t = vec![0u64; 2 * m - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let x = x as u64;
            for (j, &y) in b.iter().enumerate() {
                t[i + j] += x * y as u64;
            }
        }
        for i in (m..2 * m - 1).rev() {
            let c = t[i] % p;
            if c == 0 {
                continue;
            }
            for j in 0..m {
                t[i - m + j] += c * self.neg_top[j] as u64;
            }
        }
        t.truncate(m);
        t.into_iter().map(|v| (v % p) as u32).collect()
    }

    /// acc += s·x over F_q.
    pub fn axpy_raw(&self, s: u32, x: &[u32], acc: &mut [u32]) {
        let f = &*self.base;
        for (o, &v) in acc.iter_mut().zip(x) {
            if v != 0 {
                *o = f.add(*o, f.mul(s, v));
            }
        }
    }

    pub fn sqr(&self, a: &FFElem) -> Result<FFElem, FieldError> {
        self.mul(a, a)
    }

    pub fn pow(&self, a: &FFElem, e: &BigUint) -> Result<FFElem, FieldError> {
        self.check(a)?;
        Ok(self.wrap(self.pow_raw(&a.c, e)))
    }

    pub fn pow_u64(&self, a: &FFElem, e: u64) -> Result<FFElem, FieldError> {
        self.pow(a, &BigUint::from(e))
    }

    pub fn pow_raw(&self, a: &[u32], e: &BigUint) -> Vec<u32> {
        let mut acc = self.one().c;
        for i in (0..e.bits()).rev() {
            acc = self.mul_raw(&acc, &acc);
            if e.bit(i) {
                acc = self.mul_raw(&acc, a);
            }
        }
        acc
    }

    pub fn inv(&self, a: &FFElem) -> Result<FFElem, FieldError> {
        self.check(a)?;
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let f = &*self.base;
        let pa = Poly::from_coeffs(a.c.clone());
        let inv = pa.inv_mod(&self.top, f).ok_or(FieldError::DivisionByZero)?;
        Ok(self.wrap(self.pad(inv.coeffs())))
    }

    /// Raw Frobenius x ↦ x^q through the precomputed matrix.
    pub fn frob_raw(&self, x: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; self.m];
        for (j, &v) in x.iter().enumerate() {
            if v != 0 {
                // coefficients of F_q are fixed by x ↦ x^q
                self.axpy_raw(v, &self.frob[j], &mut out);
            }
        }
        out
    }

    /// x^{q^i}.
    pub fn frobenius(&self, x: &FFElem, i: u64) -> Result<FFElem, FieldError> {
        self.check(x)?;
        let mut c = x.c.clone();
        for _ in 0..i % self.m as u64 {
            c = self.frob_raw(&c);
        }
        Ok(self.wrap(c))
    }

    /// ξ, ξ^q, …, ξ^{q^{m−1}}.
    pub fn conjugates(&self, x: &FFElem) -> Result<Vec<FFElem>, FieldError> {
        self.check(x)?;
        let mut out = Vec::with_capacity(self.m);
        let mut c = x.c.clone();
        for _ in 0..self.m {
            let next = self.frob_raw(&c);
            out.push(self.wrap(c));
            c = next;
        }
        Ok(out)
    }

    pub fn trace_raw(&self, x: &[u32]) -> u32 {
        let f = &*self.base;
        x.iter().zip(&self.trace_vec).fold(0, |acc, (&a, &t)| f.add(acc, f.mul(a, t)))
    }

    /// Tr_{F_{q^m}/F_q}(x).
    pub fn trace(&self, x: &FFElem) -> Result<u32, FieldError> {
        self.check(x)?;
        Ok(self.trace_raw(&x.c))
    }

    /// N_{F_{q^m}/F_q}(x) as the product of the conjugates.
    pub fn norm(&self, x: &FFElem) -> Result<u32, FieldError> {
        self.check(x)?;
        Ok(self.norm_raw(&x.c))
    }

    pub fn norm_raw(&self, x: &[u32]) -> u32 {
        let mut acc = x.to_vec();
        let mut c = x.to_vec();
        for _ in 1..self.m {
            c = self.frob_raw(&c);
            acc = self.mul_raw(&acc, &c);
        }
        debug_assert!(acc[1..].iter().all(|&v| v == 0));
        acc[0]
    }

    fn is_one_raw(&self, x: &[u32]) -> bool {
        x[0] == self.base.one() && x[1..].iter().all(|&v| v == 0)
    }

    /// Exact multiplicative order by divisor descent over the factored group order.
    pub fn mult_order_of(&self, x: &FFElem, grp: &IntFactorization) -> Result<BigUint, FieldError> {
        self.check(x)?;
        if x.is_zero() {
            return Err(FieldError::ZeroElement);
        }
        grp.require_complete()?;
        let mut ord = grp.n.clone();
        for (l, _) in &grp.factors {
            while ord.is_multiple_of(l) {
                let cand = &ord / l;
                if self.is_one_raw(&self.pow_raw(&x.c, &cand)) {
                    ord = cand;
                } else {
                    break;
                }
            }
        }
        Ok(ord)
    }

    /// Order with the context's own factorization of q^m − 1.
    pub fn element_order(&self, x: &FFElem) -> Result<BigUint, FieldError> {
        self.mult_order_of(x, self.group_factorization())
    }

    /// Monic minimal polynomial over F_q as the product over distinct conjugates.
    pub fn min_poly(&self, x: &FFElem) -> Result<Poly, FieldError> {
        self.check(x)?;
        let f = &*self.base;
        let mut conj = vec![x.c.clone()];
        loop {
            let next = self.frob_raw(conj.last().expect("nonempty"));
            if next == x.c {
                break;
            }
            conj.push(next);
        }
        // product of (Y − c_i) with coefficients in F_{q^m}, constant first
        let mut prod: Vec<Vec<u32>> = vec![self.one().c];
        for c in &conj {
            let negc: Vec<u32> = c.iter().map(|&v| f.neg(v)).collect();
            let mut next = vec![vec![0u32; self.m]; prod.len() + 1];
            for (i, a) in prod.iter().enumerate() {
                for (o, &v) in next[i + 1].iter_mut().zip(a) {
                    *o = f.add(*o, v);
                }
                let t = self.mul_raw(a, &negc);
                for (o, &v) in next[i].iter_mut().zip(&t) {
                    *o = f.add(*o, v);
                }
            }
            prod = next;
        }
        let coeffs: Vec<u32> = prod
            .iter()
            .map(|c| {
                debug_assert!(c[1..].iter().all(|&v| v == 0), "min poly coefficient outside F_q");
                c[0]
            })
            .collect();
        Ok(Poly::from_coeffs(coeffs))
    }

    /// Polynomial-in-y form with F_q coefficients shown as in [`crate::poly::display_fq`].
    pub fn display(&self, x: &FFElem) -> String {
        Poly::from_coeffs(x.c.clone()).display(&self.base).replace('x', "y")
    }

    /// Is q^m − 1 divisible by r?
    pub fn divides_group(&self, r: u64) -> bool {
        r != 0 && (self.mult_order() % r).is_zero()
    }

    /// (q^m − 1)/r when r divides it.
    pub fn r_primitive_order(&self, r: u64) -> Option<BigUint> {
        self.divides_group(r).then(|| self.mult_order() / r)
    }
}
