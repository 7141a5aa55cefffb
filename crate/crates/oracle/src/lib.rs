//! Slow brute-force reference implementations. Nothing here depends on ffsieve:
//! the field is rebuilt from its two moduli with schoolbook arithmetic and full
//! exp/log tables, and every predicate is decided from first principles.
//!
//! Interface encoding: an F_q element is its rank Σ d_i p^{s−1−i} for the digit
//! vector (d_0, …, d_{s−1}) of d_0 + d_1 u + …, and an F_{q^m} element is the
//! vector of its y-coefficients (constant first), each an F_q rank.

use std::collections::BTreeMap;

/// F_{q^m} = F_q[y]/(h), F_q = F_p[u]/(g0), with full log tables.
pub struct Oracle {
    pub p: u32,
    pub s: usize,
    pub m: usize,
    pub q: u64,
    /// |F_{q^m}|.
    pub size: u64,
    g0: Vec<u32>,
    h: Vec<Vec<u32>>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// (p, s) with q = p^s, by trial division.
pub fn prime_power(q: u64) -> Option<(u32, usize)> {
    let ps = prime_divisors(q);
    if ps.len() != 1 {
        return None;
    }
    let p = ps[0];
    let mut s = 0;
    let mut t = q;
    while t > 1 {
        t /= p;
        s += 1;
    }
    Some((p as u32, s))
}

/// F_q on ranks, only for locating the canonical moduli.
struct SmallField {
    p: u32,
    s: usize,
    g0: Vec<u32>,
}

impl SmallField {
    fn q(&self) -> u32 {
        self.p.pow(self.s as u32)
    }

    fn digits(&self, mut r: u32) -> Vec<u32> {
        let mut d = vec![0; self.s];
        for i in (0..self.s).rev() {
            d[i] = r % self.p;
            r /= self.p;
        }
        d
    }

    fn rank(&self, d: &[u32]) -> u32 {
        d.iter().fold(0, |acc, &x| acc * self.p + x)
    }

    fn one(&self) -> u32 {
        self.p.pow(self.s as u32 - 1)
    }

    fn sub(&self, a: u32, b: u32) -> u32 {
        let (a, b) = (self.digits(a), self.digits(b));
        self.rank(&a.iter().zip(&b).map(|(x, y)| (x + self.p - y) % self.p).collect::<Vec<_>>())
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        let (a, b) = (self.digits(a), self.digits(b));
        let (p, s) = (self.p as u64, self.s);
        let mut t = vec![0u64; 2 * s];
        for i in 0..s {
            for j in 0..s {
                t[i + j] = (t[i + j] + a[i] as u64 * b[j] as u64) % p;
            }
        }
        for d in (s..2 * s).rev() {
            let c = t[d];
            for i in 0..s {
                t[d - s + i] = (t[d - s + i] + (p - c) * self.g0[i] as u64) % p;
            }
            t[d] = 0;
        }
        self.rank(&t[..s].iter().map(|&x| x as u32).collect::<Vec<_>>())
    }

    /// Remainder of f modulo a monic d, both constant first.
    fn rem(&self, f: &[u32], d: &[u32]) -> Vec<u32> {
        let mut f = f.to_vec();
        let dd = d.len() - 1;
        while f.len() > dd {
            let top = f.len() - 1;
            let c = f[top];
            for i in 0..=dd {
                f[top - dd + i] = self.sub(f[top - dd + i], self.mul(c, d[i]));
            }
            f.pop();
        }
        f
    }

    /// Monic polynomials of degree d in canonical order: coefficient vectors
    /// (c_0, …, c_{d−1}) lexicographic with c_0 most significant.
    fn monic(&self, d: usize, idx: u64) -> Vec<u32> {
        let q = self.q() as u64;
        let mut c = vec![0u32; d + 1];
        let mut t = idx;
        for i in (0..d).rev() {
            c[i] = (t % q) as u32;
            t /= q;
        }
        c[d] = self.one();
        c
    }

    fn is_irreducible(&self, f: &[u32]) -> bool {
        let d = f.len() - 1;
        let q = self.q() as u64;
        (1..=d / 2).all(|e| (0..q.pow(e as u32)).all(|i| self.rem(f, &self.monic(e, i)).iter().any(|&c| c != 0)))
    }

    fn first_irreducible(&self, d: usize) -> Vec<u32> {
        let q = self.q() as u64;
        let start = if d == 1 { 1 } else { 0 };
        (start..q.pow(d as u32)).map(|i| self.monic(d, i)).find(|f| self.is_irreducible(f)).expect("irreducibles exist")
    }
}

impl Oracle {
    /// `g0`: monic F_p digits of the mid modulus, constant first (ignored when s = 1).
    /// `h`: monic top modulus over F_q, constant first, as F_q ranks.
    pub fn new(p: u32, s: usize, g0: &[u32], h: &[u32]) -> Oracle {
        let m = h.len() - 1;
        let q = (p as u64).pow(s as u32);
        let size = q.pow(m as u32);
        assert!(size <= 1 << 24, "oracle fields stay small");
        let mut o = Oracle { p, s, m, q, size, g0: g0.to_vec(), h: Vec::new(), exp: Vec::new(), log: Vec::new() };
        o.h = h.iter().map(|&c| o.rank_digits(c)).collect();
        o.build_tables();
        o
    }

    /// The field with the canonical moduli: the first irreducible of each degree
    /// in canonical order, found by trial division.
    pub fn canonical(q: u64, m: usize) -> Oracle {
        let (p, s) = prime_power(q).expect("prime power");
        let g0 = if s > 1 { SmallField { p, s: 1, g0: vec![0, 1] }.first_irreducible(s) } else { vec![0, 1] };
        let h = SmallField { p, s, g0: g0.clone() }.first_irreducible(m);
        Oracle::new(p, s, &g0, &h)
    }

    pub fn moduli(&self) -> (Vec<u32>, Vec<u32>) {
        (self.g0.clone(), self.h.iter().map(|d| self.digits_rank(d)).collect())
    }

    fn rank_digits(&self, mut r: u32) -> Vec<u32> {
        let mut d = vec![0; self.s];
        for i in (0..self.s).rev() {
            d[i] = r % self.p;
            r /= self.p;
        }
        d
    }

    fn digits_rank(&self, d: &[u32]) -> u32 {
        d.iter().fold(0, |acc, &x| acc * self.p + x)
    }

    // F_q as digit vectors
    fn fq_mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let p = self.p as u64;
        let s = self.s;
        let mut t = vec![0u64; 2 * s];
        for i in 0..s {
            for j in 0..s {
                t[i + j] = (t[i + j] + a[i] as u64 * b[j] as u64) % p;
            }
        }
        for d in (s..2 * s).rev() {
            let c = t[d];
            if c != 0 {
                for i in 0..s {
                    t[d - s + i] = (t[d - s + i] + (p - c) * self.g0[i] as u64) % p;
                }
                t[d] = 0;
            }
        }
        t[..s].iter().map(|&x| x as u32).collect()
    }

    fn fq_add(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    fn fq_neg(&self, a: &[u32]) -> Vec<u32> {
        a.iter().map(|&x| (self.p - x) % self.p).collect()
    }

    /// Element index: F_p digit t of y-coefficient j sits at position j·s + t, little-endian.
    fn unpack(&self, mut x: u32) -> Vec<Vec<u32>> {
        let mut out = vec![vec![0; self.s]; self.m];
        for c in out.iter_mut() {
            for d in c.iter_mut() {
                *d = x % self.p;
                x /= self.p;
            }
        }
        out
    }

    fn pack(&self, c: &[Vec<u32>]) -> u32 {
        let mut x = 0u32;
        for cj in c.iter().rev() {
            for &d in cj.iter().rev() {
                x = x * self.p + d;
            }
        }
        x
    }

    fn slow_mul(&self, a: u32, b: u32) -> u32 {
        let (a, b) = (self.unpack(a), self.unpack(b));
        let m = self.m;
        let zero = vec![0; self.s];
        let mut t = vec![zero.clone(); 2 * m];
        for i in 0..m {
            for j in 0..m {
                t[i + j] = self.fq_add(&t[i + j], &self.fq_mul(&a[i], &b[j]));
            }
        }
        for d in (m..2 * m).rev() {
            let c = std::mem::replace(&mut t[d], zero.clone());
            for i in 0..m {
                let sub = self.fq_neg(&self.fq_mul(&c, &self.h[i]));
                t[d - m + i] = self.fq_add(&t[d - m + i], &sub);
            }
        }
        self.pack(&t[..m])
    }

    /// Generator by naive repeated multiplication: the first element (by index)
    /// whose powers run through all of F^* before returning to 1.
    fn build_tables(&mut self) {
        let n = self.size;
        let mut log = vec![u32::MAX; n as usize];
        let mut exp = Vec::with_capacity((n - 1) as usize);
        for g in 2..n as u32 {
            exp.clear();
            let mut x = 1u32;
            loop {
                exp.push(x);
                x = self.slow_mul(x, g);
                if x == 1 || x == 0 || exp.len() as u64 >= n {
                    break;
                }
            }
            if x == 1 && exp.len() as u64 == n - 1 {
                break;
            }
        }
        if n == 2 {
            exp = vec![1];
        }
        assert_eq!(exp.len() as u64, n - 1, "modulus is not irreducible");
        for (i, &x) in exp.iter().enumerate() {
            assert_eq!(log[x as usize], u32::MAX, "modulus is not irreducible");
            log[x as usize] = i as u32;
        }
        self.exp = exp;
        self.log = log;
    }

    pub fn from_coeffs(&self, c: &[u32]) -> u32 {
        let v: Vec<Vec<u32>> = (0..self.m).map(|j| self.rank_digits(c.get(j).copied().unwrap_or(0))).collect();
        self.pack(&v)
    }

    pub fn to_coeffs(&self, x: u32) -> Vec<u32> {
        self.unpack(x).iter().map(|d| self.digits_rank(d)).collect()
    }

    /// Rank of an element lying in F_q.
    fn base_rank(&self, x: u32) -> u32 {
        let c = self.to_coeffs(x);
        assert!(c[1..].iter().all(|&v| v == 0), "not in the base field");
        c[0]
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let (a, b) = (self.unpack(a), self.unpack(b));
        let c: Vec<Vec<u32>> = a.iter().zip(&b).map(|(x, y)| self.fq_add(x, y)).collect();
        self.pack(&c)
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n1 = self.size - 1;
        self.exp[((self.log[a as usize] as u64 + self.log[b as usize] as u64) % n1) as usize]
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let n1 = self.size - 1;
        self.exp[((self.log[a as usize] as u128 * e as u128) % n1 as u128) as usize]
    }

    pub fn inv(&self, a: u32) -> u32 {
        assert!(a != 0);
        let n1 = self.size - 1;
        self.exp[((n1 - self.log[a as usize] as u64) % n1) as usize]
    }

    pub fn order(&self, a: u32) -> u64 {
        let n1 = self.size - 1;
        n1 / gcd(self.log[a as usize] as u64, n1)
    }

    pub fn conjugates(&self, x: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.m);
        let mut c = x;
        for _ in 0..self.m {
            out.push(c);
            c = self.pow(c, self.q);
        }
        out
    }

    pub fn trace(&self, x: u32) -> u32 {
        self.base_rank(self.conjugates(x).into_iter().fold(0, |a, c| self.add(a, c)))
    }

    pub fn norm(&self, x: u32) -> u32 {
        self.base_rank(self.conjugates(x).into_iter().fold(1, |a, c| self.mul(a, c)))
    }

    /// Degree of x over F_q.
    pub fn degree(&self, x: u32) -> usize {
        let mut c = self.pow(x, self.q);
        let mut d = 1;
        while c != x {
            c = self.pow(c, self.q);
            d += 1;
        }
        d
    }

    /// F_q-dimension of the span of the conjugates, by F_p elimination on
    /// u^t·x^{q^j}; the F_p-rank is s times the F_q-dimension.
    pub fn conjugate_dim(&self, x: u32) -> usize {
        let mut units = Vec::new();
        for t in 0..self.s {
            let mut d = vec![0; self.s];
            d[t] = 1;
            let mut c = vec![vec![0; self.s]; self.m];
            c[0] = d;
            units.push(self.pack(&c));
        }
        let vecs: Vec<u32> =
            self.conjugates(x).into_iter().flat_map(|c| units.iter().map(move |&u| (u, c))).map(|(u, c)| self.mul(u, c)).collect();
        self.fp_rank(&vecs) / self.s
    }

    fn fp_rank(&self, vecs: &[u32]) -> usize {
        let n = self.s * self.m;
        let p = self.p as u64;
        let mut rows: Vec<Vec<u64>> = vecs
            .iter()
            .map(|&v| {
                let mut r = Vec::with_capacity(n);
                let mut x = v;
                for _ in 0..n {
                    r.push((x % self.p) as u64);
                    x /= self.p;
                }
                r
            })
            .collect();
        let mut rank = 0;
        for col in 0..n {
            let Some(piv) = (rank..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
            rows.swap(rank, piv);
            let inv = (1..p).find(|&v| v * rows[rank][col] % p == 1).unwrap();
            for v in rows[rank].iter_mut() {
                *v = *v * inv % p;
            }
            for i in 0..rows.len() {
                if i != rank && rows[i][col] != 0 {
                    let f = rows[i][col];
                    for c in 0..n {
                        rows[i][c] = (rows[i][c] + (p - f) * rows[rank][c]) % p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Monic minimal polynomial over F_q as F_q ranks, constant first.
    pub fn min_poly(&self, x: u32) -> Vec<u32> {
        let d = self.degree(x);
        let mut poly = vec![1u32];
        let mut c = x;
        for _ in 0..d {
            // poly · (Y − c)
            let mut next = vec![0u32; poly.len() + 1];
            for (i, &a) in poly.iter().enumerate() {
                next[i + 1] = self.add(next[i + 1], a);
                let t = self.mul(a, c);
                next[i] = self.add(next[i], self.mul(t, self.neg_one()));
            }
            poly = next;
            c = self.pow(c, self.q);
        }
        poly.into_iter().map(|v| self.base_rank(v)).collect()
    }

    fn neg_one(&self) -> u32 {
        if self.p == 2 {
            1
        } else {
            self.exp[((self.size - 1) / 2) as usize]
        }
    }

    /// x is l-free (for l | q^m − 1): not a d-th power for any prime d | l.
    pub fn is_l_free(&self, x: u32, l: u64) -> bool {
        x != 0 && gcd(self.log[x as usize] as u64, l) == 1
    }

    /// Applies L_f(x) = Σ f_i x^{q^i} for f over F_q given as ranks.
    pub fn lin_apply(&self, f: &[u32], x: u32) -> u32 {
        let mut acc = 0;
        let mut c = x;
        for &fi in f {
            acc = self.add(acc, self.mul(self.from_coeffs(&[fi]), c));
            c = self.pow(c, self.q);
        }
        acc
    }

    /// x is f-free iff x ∉ L_h(F_{q^m}) for every irreducible h | f. The images are
    /// F_p-subspaces, tested by rank.
    pub fn is_f_free(&self, x: u32, irreducible_factors: &[Vec<u32>]) -> bool {
        let n = self.s * self.m;
        irreducible_factors.iter().all(|h| {
            let mut img: Vec<u32> = (0..n).map(|t| self.lin_apply(h, (self.p as u64).pow(t as u32) as u32)).collect();
            let r0 = self.fp_rank(&img);
            img.push(x);
            self.fp_rank(&img) > r0
        })
    }

    /// Every r-primitive, (m−k)-spanning element, binned by (N(ξ), N(ξ)·Tr(ξ⁻¹)).
    pub fn full_table(&self, r: u64, k: usize, require_degree_m: bool) -> FullTable {
        let n1 = self.size - 1;
        let want = n1 / r;
        let mut bins = BTreeMap::new();
        let mut total = 0;
        let mut elements = Vec::new();
        for x in 1..self.size as u32 {
            if self.order(x) != want || self.conjugate_dim(x) != self.m - k {
                continue;
            }
            if require_degree_m && self.degree(x) != self.m {
                continue;
            }
            let b = self.norm(x);
            let t = self.trace(self.inv(x));
            let a = self.base_rank(self.mul(self.from_coeffs(&[b]), self.from_coeffs(&[t])));
            *bins.entry((b, a)).or_insert(0u64) += 1;
            total += 1;
            elements.push(x);
        }
        FullTable { total, bins, elements }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ElementRow {
    pub coeffs: Vec<u32>,
    pub order: u64,
    /// Degree of the F_q-order, i.e. the dimension of the conjugate span.
    pub order_degree: usize,
    pub degree: usize,
    pub trace: u32,
    pub norm: u32,
    pub trace_inv: u32,
    pub min_poly: Vec<u32>,
}

impl Oracle {
    pub fn row(&self, x: u32) -> ElementRow {
        ElementRow {
            coeffs: self.to_coeffs(x),
            order: self.order(x),
            order_degree: self.conjugate_dim(x),
            degree: self.degree(x),
            trace: self.trace(x),
            norm: self.norm(x),
            trace_inv: self.trace(self.inv(x)),
            min_poly: self.min_poly(x),
        }
    }

    /// Per-element table over F_{q^m}^*, in index order.
    pub fn rows(&self) -> Vec<ElementRow> {
        (1..self.size as u32).map(|x| self.row(x)).collect()
    }

    /// Number of elements (0 included) whose F_q-order has each degree.
    pub fn order_degree_histogram(&self) -> BTreeMap<usize, u64> {
        let mut h = BTreeMap::new();
        *h.entry(0).or_insert(0) += 1;
        for x in 1..self.size as u32 {
            *h.entry(self.conjugate_dim(x)).or_insert(0) += 1;
        }
        h
    }

    /// Number of elements of each multiplicative order.
    pub fn order_histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for x in 1..self.size as u32 {
            *h.entry(self.order(x)).or_insert(0) += 1;
        }
        h
    }
}

pub struct FullTable {
    pub total: u64,
    /// (b, a) → count, zero cells omitted.
    pub bins: BTreeMap<(u32, u32), u64>,
    /// Oracle indices of the counted elements.
    pub elements: Vec<u32>,
}

/// (q, m) pairs covering F_4, F_8, F_9, F_16, F_25, F_27, F_32, F_49, F_64 and F_81,
/// with the composite-q towers for the larger ones.
pub const GRID: [(u64, usize); 14] =
    [(2, 2), (2, 3), (3, 2), (2, 4), (4, 2), (5, 2), (3, 3), (2, 5), (7, 2), (2, 6), (4, 3), (8, 2), (3, 4), (9, 2)];

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BinFixture {
    pub r: u64,
    pub k: usize,
    pub require_degree_m: bool,
    pub total: u64,
    /// [b, a, count] for nonzero cells.
    pub cells: Vec<[u64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OracleFixture {
    pub generator: String,
    pub q: u64,
    pub m: usize,
    pub mid_modulus: Vec<u32>,
    pub top_modulus: Vec<u32>,
    pub order_histogram: BTreeMap<u64, u64>,
    pub order_degree_histogram: BTreeMap<usize, u64>,
    pub rows: Vec<ElementRow>,
    pub bins: Vec<BinFixture>,
}

/// Everything the oracle knows about one grid field. Bins cover r ∈ {1, 3} (when r | q^m − 1)
/// and every k < m, with the degree requirement on exactly when 2k < m.
pub fn fixture(q: u64, m: usize) -> OracleFixture {
    let o = Oracle::canonical(q, m);
    let (g0, h) = o.moduli();
    let mut bins = Vec::new();
    for r in [1u64, 3] {
        if (o.size - 1) % r != 0 {
            continue;
        }
        for k in 0..m {
            let req = 2 * k < m;
            let t = o.full_table(r, k, req);
            let cells = t.bins.iter().map(|(&(b, a), &c)| [b as u64, a as u64, c]).collect();
            bins.push(BinFixture { r, k, require_degree_m: req, total: t.total, cells });
        }
    }
    OracleFixture {
        generator: "ffsieve-oracle gen-fixtures (do not edit)".into(),
        q,
        m,
        mid_modulus: g0,
        top_modulus: h,
        order_histogram: o.order_histogram(),
        order_degree_histogram: o.order_degree_histogram(),
        rows: o.rows(),
        bins,
    }
}

/// Number of monic irreducibles of degree d over F_q, by Möbius inversion.
pub fn irreducible_count(q: u64, d: u64) -> u64 {
    let mut total: i128 = 0;
    for e in 1..=d {
        if d % e == 0 {
            total += mobius(d / e) as i128 * (q as i128).pow(e as u32);
        }
    }
    (total / d as i128) as u64
}

pub fn mobius(n: u64) -> i32 {
    let mut n = n;
    let mut sign = 1;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// ω(n) and 2^ω(n) by trial division.
pub fn omega(n: u64) -> usize {
    prime_divisors(n).len()
}

pub fn euler_phi(n: u64) -> u64 {
    prime_divisors(n).iter().fold(n, |acc, &p| acc / p * (p - 1))
}
