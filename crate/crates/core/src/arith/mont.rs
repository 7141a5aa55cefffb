//! Montgomery multiplication for odd moduli below 2^64 and 2^128.

#[derive(Clone, Copy, Debug)]
pub struct Mont64 {
    pub n: u64,
    ninv: u64,
    r2: u64,
    one: u64,
}

impl Mont64 {
    pub fn new(n: u64) -> Self {
        debug_assert!(n & 1 == 1 && n > 1);
        // Newton iteration for n^{-1} mod 2^64
        let mut inv = n;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % n as u128) as u64;
        let r2 = ((r as u128 * r as u128) % n as u128) as u64;
        Mont64 { n, ninv: inv, r2, one: r }
    }

    #[inline]
    fn reduce(&self, t: u128) -> u64 {
        let lo = t as u64;
        let hi = (t >> 64) as u64;
        let m = lo.wrapping_mul(self.ninv);
        let mn_hi = ((m as u128 * self.n as u128) >> 64) as u64;
        let (r, borrow) = hi.overflowing_sub(mn_hi);
        if borrow {
            r.wrapping_add(self.n)
        } else {
            r
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let (s, c) = a.overflowing_add(b);
        if c || s >= self.n {
            s.wrapping_sub(self.n)
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.n)
        }
    }

    pub fn to_mont(&self, a: u64) -> u64 {
        self.mul(a % self.n, self.r2)
    }

    pub fn from_mont(&self, a: u64) -> u64 {
        self.reduce(a as u128)
    }

    pub fn one(&self) -> u64 {
        self.one
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = self.one;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64 as u128, a >> 64);
    let (b0, b1) = (b as u64 as u128, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 as u64 as u128) + (p10 as u64 as u128);
    let lo = (p00 as u64 as u128) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (lo, hi)
}

#[derive(Clone, Copy, Debug)]
pub struct Mont128 {
    pub n: u128,
    ninv: u128,
    r2: u128,
    one: u128,
}

impl Mont128 {
    pub fn new(n: u128) -> Self {
        debug_assert!(n & 1 == 1 && n > 1);
        let mut inv = n;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        // 2^128 mod n, then square it by doubling 128 times
        let one = (u128::MAX % n + 1) % n;
        let mut r2 = one;
        for _ in 0..128 {
            r2 = add_mod(r2, r2, n);
        }
        Mont128 { n, ninv: inv, r2, one }
    }

    #[inline]
    fn reduce(&self, lo: u128, hi: u128) -> u128 {
        let m = lo.wrapping_mul(self.ninv);
        let (_, mn_hi) = mul_wide(m, self.n);
        let (r, borrow) = hi.overflowing_sub(mn_hi);
        if borrow {
            r.wrapping_add(self.n)
        } else {
            r
        }
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        let (lo, hi) = mul_wide(a, b);
        self.reduce(lo, hi)
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        add_mod(a, b, self.n)
    }

    #[inline]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.n)
        }
    }

    pub fn to_mont(&self, a: u128) -> u128 {
        self.mul(a % self.n, self.r2)
    }

    pub fn from_mont(&self, a: u128) -> u128 {
        self.reduce(a, 0)
    }

    pub fn one(&self) -> u128 {
        self.one
    }

    pub fn pow(&self, mut base: u128, mut e: u128) -> u128 {
        let mut acc = self.one;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

#[inline]
fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    let (s, c) = a.overflowing_add(b);
    if c || s >= n {
        s.wrapping_sub(n)
    } else {
        s
    }
}

pub fn mulmod64(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn powmod64(mut b: u64, mut e: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    b %= n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod64(acc, b, n);
        }
        b = mulmod64(b, b, n);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_product_matches_split() {
        let a = u128::MAX - 12345;
        let b = (1u128 << 100) + 77;
        let (lo, hi) = mul_wide(a, b);
        // check modulo a 61-bit prime
        let p = (1u128 << 61) - 1;
        let lhs = ((a % p) * (b % p)) % p;
        let two64 = (1u128 << 64) % p;
        let two128 = (two64 * two64) % p;
        let rhs = ((hi % p) * two128 + lo % p) % p;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mont64_roundtrip_and_pow() {
        for n in [3u64, 1_000_000_007, (1u64 << 63) + 29, u64::MAX - 58] {
            let m = Mont64::new(n);
            let a = 123456789u64 % n;
            let b = 987654321987u64 % n;
            let got = m.from_mont(m.mul(m.to_mont(a), m.to_mont(b)));
            assert_eq!(got, mulmod64(a, b, n));
            let e = 1_000_003;
            assert_eq!(m.from_mont(m.pow(m.to_mont(a), e)), powmod64(a, e, n));
        }
    }

    #[test]
    fn mont128_agrees_with_mont64_range() {
        let n = 1_000_000_007u128;
        let m = Mont128::new(n);
        let a = 5u128;
        let x = m.from_mont(m.pow(m.to_mont(a), n - 1));
        assert_eq!(x, 1);
        let big = (1u128 << 89) - 1; // Mersenne prime
        let mb = Mont128::new(big);
        let y = mb.from_mont(mb.pow(mb.to_mont(3), big - 1));
        assert_eq!(y, 1);
    }
}
