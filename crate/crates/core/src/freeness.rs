//! l-free and f-free predicates, F_q-order, k-normality and r-primitivity.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{compute_qe, factor_u64, IntFactorization};
use crate::field::{BaseField, FFElem, FieldCtx, FieldError};
use crate::poly::{factor_xm_minus_1, module_action, Poly, PolyError, PolyFactorization, DEFAULT_DIVISOR_CAP};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreenessError {
    #[error("zero element")]
    ZeroElement,
    #[error("{0} does not divide q^m - 1")]
    RDoesNotDivide(String),
    #[error("not a divisor")]
    NotADivisor,
    #[error("element is not normal")]
    NotNormal,
    #[error("g is not a divisor of x^m - 1 of the requested degree")]
    BadDivisor,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl From<crate::arith::ArithError> for FreenessError {
    fn from(e: crate::arith::ArithError) -> Self {
        FreenessError::Field(e.into())
    }
}

/// An F_q-linear map on F_{q^m}, stored by columns (images of y^j).
#[derive(Clone, Debug)]
pub struct ActionMatrix {
    cols: Vec<Vec<u32>>,
}

impl ActionMatrix {
    /// The map ξ ↦ f∘ξ.
    pub fn of_poly(ctx: &FieldCtx, f: &Poly) -> Self {
        let m = ctx.m();
        let cols = (0..m)
            .map(|j| {
                let mut e = vec![0u32; m];
                e[j] = ctx.base().one();
                let mut acc = vec![0u32; m];
                let mut cur = e;
                for i in 0..=f.degree() {
                    let a = f.coeff(i);
                    if a != 0 {
                        ctx.axpy_raw(a, &cur, &mut acc);
                    }
                    cur = ctx.frob_raw(&cur);
                }
                acc
            })
            .collect();
        ActionMatrix { cols }
    }

    pub fn apply(&self, ctx: &FieldCtx, x: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; x.len()];
        for (j, &v) in x.iter().enumerate() {
            if v != 0 {
                ctx.axpy_raw(v, &self.cols[j], &mut out);
            }
        }
        out
    }

    /// Whether the map sends x to zero, without allocating on the common nonzero path.
    pub fn kills(&self, f: &BaseField, x: &[u32]) -> bool {
        let m = x.len();
        for i in 0..m {
            let mut acc = 0u32;
            for (j, &v) in x.iter().enumerate() {
                if v != 0 {
                    let c = self.cols[j][i];
                    if c != 0 {
                        acc = f.add(acc, f.mul(v, c));
                    }
                }
            }
            if acc != 0 {
                return false;
            }
        }
        true
    }
}

/// Precomputed data for F_q-orders in one field: the factorization of x^m − 1 and,
/// per distinct factor P^e, the maps ξ ↦ ((x^m−1)/P^{e−j})∘ξ for j < e.
#[derive(Debug)]
pub struct OrderTester {
    pub xm1: PolyFactorization,
    maps: Vec<Vec<ActionMatrix>>,
}

impl OrderTester {
    pub fn new(ctx: &FieldCtx) -> Self {
        let f = ctx.base();
        let xm1 = factor_xm_minus_1(f, ctx.m());
        let maps = xm1
            .factors
            .iter()
            .map(|(p, e)| {
                let mut cof = xm1.base.clone();
                for _ in 0..*e {
                    cof = cof.divrem(p, f).expect("nonzero").0;
                }
                // cof = (x^m−1)/P^e; successive maps multiply by P
                let mut out = Vec::with_capacity(*e as usize);
                let mut g = cof;
                for _ in 0..*e {
                    out.push(ActionMatrix::of_poly(ctx, &g));
                    g = g.mul(p, f);
                }
                out
            })
            .collect();
        OrderTester { xm1, maps }
    }

    /// Exponent vector of Ord_q(ξ) over the distinct factors of x^m − 1.
    pub fn order_exponents(&self, ctx: &FieldCtx, x: &[u32]) -> Vec<u32> {
        let f = ctx.base();
        self.maps
            .iter()
            .zip(&self.xm1.factors)
            .map(|(ms, (_, e))| ms.iter().position(|a| a.kills(f, x)).map_or(*e, |j| j as u32))
            .collect()
    }

    pub fn order_degree(&self, ctx: &FieldCtx, x: &[u32]) -> usize {
        self.order_exponents(ctx, x)
            .iter()
            .zip(&self.xm1.factors)
            .map(|(&k, (p, _))| k as usize * p.degree())
            .sum()
    }

    /// Is deg Ord_q(ξ) = m − k? Stops as soon as the degree deficit exceeds k.
    pub fn is_k_normal_raw(&self, ctx: &FieldCtx, x: &[u32], k: usize) -> bool {
        let f = ctx.base();
        let mut deficit = 0usize;
        for (ms, (p, e)) in self.maps.iter().zip(&self.xm1.factors) {
            let kept = ms.iter().position(|a| a.kills(f, x)).map_or(*e, |j| j as u32);
            deficit += (*e - kept) as usize * p.degree();
            if deficit > k {
                return false;
            }
        }
        deficit == k
    }

    pub fn fq_order(&self, ctx: &FieldCtx, x: &FFElem) -> Result<Poly, FreenessError> {
        ctx.check(x)?;
        let exps = self.order_exponents(ctx, x.coeffs());
        Ok(self.xm1.divisor(&exps, ctx.base()).base)
    }
}

/// Minimal annihilating divisor by scanning all divisors of x^m − 1 in canonical order.
pub fn fq_order_by_scan(ctx: &FieldCtx, xm1: &PolyFactorization, x: &FFElem) -> Result<Poly, FreenessError> {
    ctx.check(x)?;
    for g in xm1.divisors(ctx.base(), DEFAULT_DIVISOR_CAP)? {
        if module_action(ctx, &g, x)?.is_zero() {
            return Ok(g);
        }
    }
    unreachable!("x^m - 1 annihilates every element")
}

/// F_q-order of ξ; builds the factor data on each call, so prefer [`OrderTester`] in loops.
pub fn fq_order(ctx: &FieldCtx, x: &FFElem) -> Result<Poly, FreenessError> {
    OrderTester::new(ctx).fq_order(ctx, x)
}

pub fn is_k_normal(ctx: &FieldCtx, x: &FFElem, k: usize) -> Result<bool, FreenessError> {
    ctx.check(x)?;
    Ok(k <= ctx.m() && OrderTester::new(ctx).is_k_normal_raw(ctx, x.coeffs(), k))
}

/// Dimension of the F_q-span of the conjugates of ξ, by Gaussian elimination.
pub fn conjugate_span_dim(ctx: &FieldCtx, x: &FFElem) -> Result<usize, FieldError> {
    let f = ctx.base();
    let mut rows: Vec<Vec<u32>> = ctx.conjugates(x)?.into_iter().map(|c| c.coeffs().to_vec()).collect();
    let m = ctx.m();
    let mut rank = 0;
    for col in 0..m {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = f.inv(rows[rank][col])?;
        let pivot: Vec<u32> = rows[rank].iter().map(|&v| f.mul(v, inv)).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let c = row[col];
                for (a, &b) in row.iter_mut().zip(&pivot) {
                    *a = f.sub(*a, f.mul(c, b));
                }
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    Ok(rank)
}

/// f-free: gcd(f, (x^m−1)/Ord_q(ξ)) = 1.
pub fn is_f_free(ctx: &FieldCtx, tester: &OrderTester, x: &FFElem, fpoly: &Poly) -> Result<bool, FreenessError> {
    let fb = ctx.base();
    tester.xm1.exponents_of(fpoly, fb).map_err(|e| match e {
        PolyError::NotADivisor => FreenessError::NotADivisor,
        other => other.into(),
    })?;
    let ord = tester.fq_order(ctx, x)?;
    let cof = tester.xm1.base.divrem(&ord, fb)?.0;
    Ok(fpoly.gcd(&cof, fb).is_one(fb))
}

fn one_raw(ctx: &FieldCtx, x: &[u32]) -> bool {
    x[0] == ctx.base().one() && x[1..].iter().all(|&v| v == 0)
}

/// l-free: gcd(l, (q^m−1)/ord ξ) = 1, i.e. ξ^{(q^m−1)/p} ≠ 1 for each prime p | l.
pub fn is_l_free(ctx: &FieldCtx, x: &FFElem, l: &IntFactorization, grp: &IntFactorization) -> Result<bool, FreenessError> {
    ctx.check(x)?;
    if x.is_zero() {
        return Err(FreenessError::ZeroElement);
    }
    l.require_complete()?;
    grp.require_complete()?;
    if !(&grp.n % &l.n).is_zero() {
        return Err(FreenessError::NotADivisor);
    }
    for (p, _) in &l.factors {
        if ctx.pow_raw(x.coeffs(), &(&grp.n / p)).as_slice() == ctx.one().coeffs() {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn is_r_primitive(ctx: &FieldCtx, x: &FFElem, r: u64, grp: &IntFactorization) -> Result<bool, FreenessError> {
    ctx.check(x)?;
    if x.is_zero() {
        return Err(FreenessError::ZeroElement);
    }
    grp.require_complete()?;
    let rb = BigUint::from(r);
    if r == 0 || !(&grp.n % &rb).is_zero() {
        return Err(FreenessError::RDoesNotDivide(r.to_string()));
    }
    let target = &grp.n / &rb;
    if !one_raw(ctx, &ctx.pow_raw(x.coeffs(), &target)) {
        return Ok(false);
    }
    for (p, _) in &grp.factors {
        if (&target % p).is_zero() && one_raw(ctx, &ctx.pow_raw(x.coeffs(), &(&target / p))) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Lemma-style construction ξ = g∘β for a normal β and a degree-k divisor g.
pub fn make_k_normal(ctx: &FieldCtx, tester: &OrderTester, beta: &FFElem, g: &Poly) -> Result<FFElem, FreenessError> {
    ctx.check(beta)?;
    if !tester.is_k_normal_raw(ctx, beta.coeffs(), 0) {
        return Err(FreenessError::NotNormal);
    }
    if !g.is_monic(ctx.base()) || tester.xm1.exponents_of(g, ctx.base()).is_err() {
        return Err(FreenessError::BadDivisor);
    }
    let xi = module_action(ctx, g, beta)?;
    assert!(
        tester.is_k_normal_raw(ctx, xi.coeffs(), g.degree()),
        "g∘β must be k-normal for normal β"
    );
    Ok(xi)
}

/// Is b ∈ F_q^* l-free in F_q^*, i.e. b^{(q−1)/p} ≠ 1 for every prime p | gcd(l, q−1)?
pub fn is_free_in_base(f: &BaseField, b: u32, l: u64) -> bool {
    if b == 0 {
        return false;
    }
    let qm1 = f.q() - 1;
    let g = l.gcd(&qm1);
    factor_u64(g).iter().all(|&(p, _)| f.pow(b, qm1 / p) != f.one())
}

/// (ξ is e-free, ξ is Q_e-free, N(ξ) is δ-free in F_q^*).
pub fn efree_decomposition_check(
    ctx: &FieldCtx,
    x: &FFElem,
    e: &IntFactorization,
    grp: &IntFactorization,
) -> Result<(bool, bool, bool), FreenessError> {
    let (qe, delta) = compute_qe(e, ctx.q());
    let a = is_l_free(ctx, x, e, grp)?;
    let b = is_l_free(ctx, x, &qe, grp)?;
    let delta = delta.to_u64().expect("δ divides q − 1");
    let c = is_free_in_base(ctx.base(), ctx.norm(x)?, delta);
    Ok((a, b, c))
}

/// Does b ∈ F_q^* have order exactly (q−1)/w, w = gcd(r, q−1)? These are the values c^r for
/// primitive c, which is the set of norms of r-primitive elements.
pub fn is_norm_feasible(f: &BaseField, b: u32, r: u64) -> bool {
    if b == 0 {
        return false;
    }
    let qm1 = f.q() - 1;
    let target = qm1 / r.gcd(&qm1);
    f.pow(b, target) == f.one() && factor_u64(target).iter().all(|&(p, _)| f.pow(b, target / p) != f.one())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WfreeNormReport {
    pub q: u64,
    pub m: usize,
    pub r: u64,
    pub w: u64,
    /// Norms attained by r-primitive elements.
    pub attained: Vec<u32>,
    /// Elements of F_q^* that are w-free in the gcd sense.
    pub w_free: Vec<u32>,
    /// Elements of F_q^* of order (q−1)/w.
    pub feasible: Vec<u32>,
    /// attained == w_free.
    pub holds_literal: bool,
    /// attained == feasible.
    pub holds: bool,
}

/// Both directions of the w-free norm statement, by enumerating r-primitive elements.
pub fn wfree_norm_check(ctx: &FieldCtx, r: u64) -> Result<WfreeNormReport, FreenessError> {
    ctx.require_enumerable()?;
    let grp = ctx.group_factorization();
    grp.require_complete()?;
    if !ctx.divides_group(r) {
        return Err(FreenessError::RDoesNotDivide(r.to_string()));
    }
    let f = ctx.base();
    let w = r.gcd(&(ctx.q() - 1));
    let mut attained = BTreeSet::new();
    for x in r_primitive_elements(ctx, r)? {
        attained.insert(ctx.norm_raw(&x));
    }
    let w_free: Vec<u32> = (1..ctx.q() as u32).filter(|&b| is_free_in_base(f, b, w)).collect();
    let feasible: Vec<u32> = (1..ctx.q() as u32).filter(|&b| is_norm_feasible(f, b, r)).collect();
    let attained: Vec<u32> = attained.into_iter().collect();
    Ok(WfreeNormReport {
        q: ctx.q(),
        m: ctx.m(),
        r,
        w,
        holds_literal: attained == w_free,
        holds: attained == feasible,
        attained,
        w_free,
        feasible,
    })
}

/// The first primitive element in canonical order.
pub fn first_primitive(ctx: &FieldCtx) -> Result<FFElem, FreenessError> {
    let grp = ctx.group_factorization();
    grp.require_complete()?;
    let n = &grp.n;
    let cofactors: Vec<BigUint> = grp.factors.iter().map(|(p, _)| n / p).collect();
    let mut rank = 1u64;
    loop {
        let x = ctx.from_rank(rank);
        if cofactors.iter().all(|c| !one_raw(ctx, &ctx.pow_raw(x.coeffs(), c))) {
            return Ok(x);
        }
        rank += 1;
    }
}

/// All r-primitive elements as raw coefficient vectors, γ^{r·j} for gcd(j, (q^m−1)/r) = 1.
pub fn r_primitive_elements(ctx: &FieldCtx, r: u64) -> Result<Vec<Vec<u32>>, FreenessError> {
    let n = ctx.require_enumerable()? - 1;
    if r == 0 || n % r != 0 {
        return Err(FreenessError::RDoesNotDivide(r.to_string()));
    }
    let g = first_primitive(ctx)?;
    let step = ctx.pow_raw(g.coeffs(), &BigUint::from(r));
    let nr = n / r;
    let mut out = Vec::new();
    let mut cur = step.clone();
    for j in 1..=nr {
        if j.gcd(&nr) == 1 {
            out.push(cur.clone());
        }
        cur = ctx.mul_raw(&cur, &step);
    }
    Ok(out)
}

/// Checks a FreenessSpec-style pair (e | q^m − 1, f | x^m − 1).
#[derive(Clone, Debug)]
pub struct FreenessSpec {
    pub e: IntFactorization,
    pub f: Poly,
}

impl FreenessSpec {
    pub fn new(ctx: &FieldCtx, xm1: &PolyFactorization, e: IntFactorization, f: Poly) -> Result<Self, FreenessError> {
        if !(ctx.mult_order() % &e.n).is_zero() {
            return Err(FreenessError::NotADivisor);
        }
        xm1.exponents_of(&f, ctx.base()).map_err(|_| FreenessError::NotADivisor)?;
        Ok(FreenessSpec { e, f })
    }

    pub fn is_trivial(&self, fb: &BaseField) -> bool {
        self.e.n.is_one() && self.f.is_one(fb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fq_order_examples() {
        let ctx = FieldCtx::new(2, 3).unwrap();
        let t = OrderTester::new(&ctx);
        assert!(t.fq_order(&ctx, &ctx.zero()).unwrap().is_one(ctx.base()));
        assert_eq!(t.fq_order(&ctx, &ctx.one()).unwrap(), Poly::linear(1, ctx.base()));
        let normals: Vec<FFElem> =
            ctx.enumerate().unwrap().filter(|x| t.order_degree(&ctx, x.coeffs()) == 3).collect();
        assert_eq!(normals.len(), 3);
        for b in &normals {
            assert_eq!(t.fq_order(&ctx, b).unwrap(), Poly::xm_minus_1(3, ctx.base()));
        }
    }

    #[test]
    fn scan_and_rank_agree() {
        for (q, m) in [(2u64, 4usize), (3, 3), (4, 2), (2, 6), (5, 2)] {
            let ctx = FieldCtx::new(q, m).unwrap();
            let t = OrderTester::new(&ctx);
            for x in ctx.enumerate().unwrap() {
                let a = t.fq_order(&ctx, &x).unwrap();
                assert_eq!(a, fq_order_by_scan(&ctx, &t.xm1, &x).unwrap());
                assert_eq!(a.degree() * usize::from(!x.is_zero()), conjugate_span_dim(&ctx, &x).unwrap());
            }
        }
    }

    #[test]
    fn l_free_examples() {
        let ctx = FieldCtx::new(2, 4).unwrap();
        let grp = ctx.group_factorization().clone();
        let three = IntFactorization::from_u64_pairs(&[(3, 1)]);
        let one = IntFactorization::one();
        let g = first_primitive(&ctx).unwrap();
        assert!(is_l_free(&ctx, &g, &grp, &grp).unwrap());
        let o5 = ctx.pow_u64(&g, 3).unwrap();
        assert!(!is_l_free(&ctx, &o5, &three, &grp).unwrap());
        assert!(is_l_free(&ctx, &o5, &one, &grp).unwrap());
        assert_eq!(is_l_free(&ctx, &ctx.zero(), &one, &grp), Err(FreenessError::ZeroElement));
        let n3 = ctx.enumerate().unwrap().skip(1).filter(|x| is_r_primitive(&ctx, x, 3, &grp).unwrap()).count();
        assert_eq!(n3, 4);
        assert!(matches!(is_r_primitive(&ctx, &g, 7, &grp), Err(FreenessError::RDoesNotDivide(_))));
    }

    #[test]
    fn f_free_examples() {
        let ctx = FieldCtx::new(2, 3).unwrap();
        let t = OrderTester::new(&ctx);
        let f = ctx.base();
        let x1 = Poly::linear(1, f);
        assert!(is_f_free(&ctx, &t, &ctx.one(), &x1).unwrap());
        assert!(is_f_free(&ctx, &t, &ctx.one(), &Poly::one(f)).unwrap());
        let bad = Poly::from_coeffs(vec![1, 1, 0, 1]);
        assert_eq!(is_f_free(&ctx, &t, &ctx.one(), &bad), Err(FreenessError::NotADivisor));
    }

    #[test]
    fn make_k_normal_examples() {
        let ctx = FieldCtx::new(2, 4).unwrap();
        let t = OrderTester::new(&ctx);
        let g = Poly::linear(1, ctx.base());
        let mut n = 0;
        for b in ctx.enumerate().unwrap() {
            if t.is_k_normal_raw(&ctx, b.coeffs(), 0) {
                let xi = make_k_normal(&ctx, &t, &b, &g).unwrap();
                assert!(t.is_k_normal_raw(&ctx, xi.coeffs(), 1));
                n += 1;
            }
        }
        assert_eq!(n, 8);
        assert_eq!(make_k_normal(&ctx, &t, &ctx.one(), &g), Err(FreenessError::NotNormal));
    }

    #[test]
    fn wfree_examples() {
        // 3-primitive elements of F_16 have order 5, so their norm ξ^5 is 1
        let rep = wfree_norm_check(&FieldCtx::new(4, 2).unwrap(), 3).unwrap();
        assert_eq!(rep.w, 3);
        assert_eq!(rep.attained, vec![2]);
        assert!(rep.holds && !rep.holds_literal);
        // order 8 in F_25: norms ξ^6 have order 4
        let rep = wfree_norm_check(&FieldCtx::new(5, 2).unwrap(), 3).unwrap();
        assert_eq!((rep.w, rep.attained.clone(), rep.holds), (1, vec![2, 3], true));
        assert_eq!(rep.w_free.len(), 4);
        // r = 1: norms of primitive elements are the primitive elements of F_q
        let rep = wfree_norm_check(&FieldCtx::new(4, 2).unwrap(), 1).unwrap();
        assert_eq!(rep.attained.len(), 2);
        assert!(rep.holds);
    }
}
