use std::sync::OnceLock;

use super::{FieldError, PrimePower};
use crate::poly::Poly;

/// Base fields with more elements than this are rejected when s > 1.
pub const MAX_TABLE_FIELD: u64 = 1 << 24;
const ADD_TABLE_LIMIT: u64 = 1024;

/// Discrete log tables of F_q^* relative to a fixed generator.
#[derive(Debug)]
pub struct LogTables {
    pub generator: u32,
    /// exp[i] = g^i for 0 ≤ i < 2(q−1).
    pub exp: Vec<u32>,
    /// log[a] for a ≠ 0; log[0] is unused.
    pub log: Vec<u32>,
}

/// F_q as F_p[u]/(g0). Elements are their canonical ranks: for the coefficient
/// vector (d_0, …, d_{s−1}) of d_0 + d_1 u + …, rank = Σ d_i p^{s−1−i}.
#[derive(Debug)]
pub struct BaseField {
    pub pp: PrimePower,
    /// Mid modulus over F_p (constant first), only for s > 1.
    modulus: Option<Poly>,
    add_table: Option<Vec<u16>>,
    tables: OnceLock<LogTables>,
    place: Vec<u64>,
}

impl BaseField {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        let pp = PrimePower::new(q)?;
        if pp.s == 1 {
            return Ok(Self::prime(pp));
        }
        if q > MAX_TABLE_FIELD {
            return Err(FieldError::FieldTooLarge(format!("base field of order {q}")));
        }
        let fp = Self::prime(PrimePower::new(pp.p)?);
        let modulus = crate::poly::first_irreducible(&fp, pp.s as usize);
        let mut place = vec![1u64; pp.s as usize];
        for i in (0..pp.s as usize - 1).rev() {
            place[i] = place[i + 1] * pp.p;
        }
        let mut f = BaseField { pp, modulus: Some(modulus), add_table: None, tables: OnceLock::new(), place };
        if pp.p != 2 && q <= ADD_TABLE_LIMIT {
            let mut t = vec![0u16; (q * q) as usize];
            for a in 0..q as u32 {
                for b in 0..q as u32 {
                    t[(a as u64 * q + b as u64) as usize] = f.add_digits(a, b) as u16;
                }
            }
            f.add_table = Some(t);
        }
        f.build_tables_from_poly(&fp);
        Ok(f)
    }

    fn prime(pp: PrimePower) -> Self {
        BaseField { pp, modulus: None, add_table: None, tables: OnceLock::new(), place: vec![1] }
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.pp.q
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.pp.p
    }

    pub fn is_prime_field(&self) -> bool {
        self.pp.s == 1
    }

    pub fn mid_modulus(&self) -> Option<&Poly> {
        self.modulus.as_ref()
    }

    /// F_p coefficient vector (constant first) of an element.
    pub fn digits(&self, a: u32) -> Vec<u32> {
        let p = self.pp.p;
        self.place.iter().map(|&pl| ((a as u64 / pl) % p) as u32).collect()
    }

    pub fn from_digits(&self, d: &[u32]) -> u32 {
        d.iter().zip(&self.place).map(|(&x, &pl)| x as u64 * pl).sum::<u64>() as u32
    }

    fn add_digits(&self, a: u32, b: u32) -> u32 {
        let p = self.pp.p;
        let mut out = 0u64;
        for &pl in &self.place {
            let x = (a as u64 / pl) % p;
            let y = (b as u64 / pl) % p;
            out += ((x + y) % p) * pl;
        }
        out as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.pp.s == 1 {
            let s = a as u64 + b as u64;
            let p = self.pp.p;
            return if s >= p { (s - p) as u32 } else { s as u32 };
        }
        if self.pp.p == 2 {
            return a ^ b;
        }
        match &self.add_table {
            Some(t) => t[(a as u64 * self.pp.q + b as u64) as usize] as u32,
            None => self.add_digits(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if self.pp.p == 2 || a == 0 {
            return a;
        }
        if self.pp.s == 1 {
            return (self.pp.p - a as u64) as u32;
        }
        let p = self.pp.p;
        let mut out = 0u64;
        for &pl in &self.place {
            let x = (a as u64 / pl) % p;
            out += ((p - x) % p) * pl;
        }
        out as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.pp.s == 1 {
            return ((a as u64 * b as u64) % self.pp.p) as u32;
        }
        let t = self.tables();
        t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u32) -> Result<u32, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        if self.pp.s == 1 {
            return Ok(self.pow(a, self.pp.p - 2));
        }
        let t = self.tables();
        let qm1 = (self.pp.q - 1) as u32;
        Ok(t.exp[((qm1 - t.log[a as usize]) % qm1) as usize])
    }

    /// The integer n as an element of the prime field.
    pub fn from_int(&self, n: i64) -> u32 {
        let p = self.pp.p as i64;
        let r = n.rem_euclid(p) as u32;
        // the prime subfield sits at the constant digit, the most significant place
        r * self.place[0] as u32
    }

    pub fn one(&self) -> u32 {
        self.from_int(1)
    }

    /// Absolute trace F_q → F_p, as an integer in 0..p.
    pub fn abs_trace(&self, a: u32) -> u64 {
        let mut acc = a;
        let mut x = a;
        for _ in 1..self.pp.s {
            x = self.pow(x, self.pp.p);
            acc = self.add(acc, x);
        }
        acc as u64 / self.place[0]
    }

    pub fn tables(&self) -> &LogTables {
        self.tables.get_or_init(|| self.build_prime_tables())
    }

    fn fill_tables(&self, g: u32, mulg: impl Fn(u32) -> u32) -> LogTables {
        let q = self.pp.q as usize;
        let mut exp = vec![0u32; 2 * (q - 1)];
        let mut log = vec![0u32; q];
        let mut x = self.one();
        for i in 0..q - 1 {
            exp[i] = x;
            exp[i + q - 1] = x;
            log[x as usize] = i as u32;
            x = mulg(x);
        }
        LogTables { generator: g, exp, log }
    }

    fn build_prime_tables(&self) -> LogTables {
        let p = self.pp.p;
        let qm1 = p - 1;
        let primes: Vec<u64> = crate::arith::factor_u64(qm1).into_iter().map(|(l, _)| l).collect();
        let g = (1..p)
            .find(|&g| primes.iter().all(|&l| crate::arith::mont::powmod64(g, qm1 / l, p) != 1))
            .unwrap_or(1) as u32;
        self.fill_tables(g, |x| ((x as u64 * g as u64) % p) as u32)
    }

    /// Tables for s > 1: multiply by u-powers using the mid modulus, find the
    /// first generator in canonical order.
    fn build_tables_from_poly(&self, fp: &BaseField) {
        let modulus = self.modulus.as_ref().expect("extension field");
        let s = self.pp.s as usize;
        let q = self.pp.q;
        let mulpoly = |a: u32, b: u32| -> u32 {
            let pa = Poly::from_coeffs(self.digits(a));
            let pb = Poly::from_coeffs(self.digits(b));
            let r = pa.mul(&pb, fp).rem(modulus, fp);
            let mut d = r.coeffs().to_vec();
            d.resize(s, 0);
            self.from_digits(&d)
        };
        let qm1 = q - 1;
        let primes: Vec<u64> = crate::arith::factor_u64(qm1).into_iter().map(|(l, _)| l).collect();
        let powp = |mut base: u32, mut e: u64| -> u32 {
            let mut acc = self.one();
            while e > 0 {
                if e & 1 == 1 {
                    acc = mulpoly(acc, base);
                }
                base = mulpoly(base, base);
                e >>= 1;
            }
            acc
        };
        let one = self.one();
        let g = (1..q as u32)
            .find(|&g| primes.iter().all(|&l| powp(g, qm1 / l) != one))
            .expect("F_q^* is cyclic");
        let t = self.fill_tables(g, |x| mulpoly(x, g));
        let _ = self.tables.set(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_modulus_and_arith() {
        let f = BaseField::new(4).unwrap();
        assert_eq!(f.mid_modulus().unwrap().coeffs(), &[1, 1, 1]);
        // rank encodes (d0, d1) with d0 most significant: u = (0,1) -> 1, 1 = (1,0) -> 2
        let u = f.from_digits(&[0, 1]);
        let one = f.one();
        assert_eq!((u, one), (1, 2));
        assert_eq!(f.mul(u, u), f.add(u, one));
        for a in 1..4 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), one);
        }
    }

    #[test]
    fn f8_and_f9_moduli() {
        let f8 = BaseField::new(8).unwrap();
        assert_eq!(f8.mid_modulus().unwrap().coeffs(), &[1, 0, 1, 1]);
        let f9 = BaseField::new(9).unwrap();
        assert_eq!(f9.mid_modulus().unwrap().coeffs(), &[1, 0, 1]);
    }

    #[test]
    fn field_axioms_small() {
        for q in [2u64, 3, 4, 5, 8, 9, 16, 25, 27, 49] {
            let f = BaseField::new(q).unwrap();
            let q = q as u32;
            for a in 0..q {
                assert_eq!(f.add(a, f.neg(a)), 0);
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q.min(7) {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
            // absolute trace is onto F_p
            let mut seen = vec![false; f.p() as usize];
            for a in 0..q {
                seen[f.abs_trace(a) as usize] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}
