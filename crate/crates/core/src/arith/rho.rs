//! Pollard rho with Brent's cycle detection and batched gcds.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::mont::{Mont128, Mont64};

const BATCH: u64 = 128;

fn gcd64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Returns a nontrivial factor of the odd composite `n`, or None once `budget`
/// iterations are spent.
pub fn rho_u64(n: u64, budget: &mut u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let m = Mont64::new(n);
    for c0 in 1u64.. {
        let c = m.to_mont(c0);
        let f = |x: u64| m.add(m.mul(x, x), c);
        let mut y = m.to_mont(2);
        let mut x = y;
        let mut ys = y;
        let mut q = m.one();
        let mut g = 1u64;
        let mut r = 1u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let lim = BATCH.min(r - k);
                for _ in 0..lim {
                    y = f(y);
                    q = m.mul(q, x.abs_diff(y));
                }
                g = gcd64(m.from_mont(q), n);
                k += lim;
                if *budget <= lim {
                    return None;
                }
                *budget -= lim;
            }
            r <<= 1;
        }
        if g == n {
            // backtrack one step at a time
            loop {
                ys = f(ys);
                g = gcd64(m.from_mont(x.abs_diff(ys)), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Some(g);
        }
    }
    None
}

pub fn rho_u128(n: u128, budget: &mut u64) -> Option<u128> {
    if n <= u64::MAX as u128 {
        return rho_u64(n as u64, budget).map(|f| f as u128);
    }
    if n % 2 == 0 {
        return Some(2);
    }
    let m = Mont128::new(n);
    for c0 in 1u128.. {
        let c = m.to_mont(c0);
        let f = |x: u128| m.add(m.mul(x, x), c);
        let mut y = m.to_mont(2);
        let mut x = y;
        let mut ys = y;
        let mut q = m.one();
        let mut g = 1u128;
        let mut r = 1u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let lim = BATCH.min(r - k);
                for _ in 0..lim {
                    y = f(y);
                    q = m.mul(q, x.abs_diff(y));
                }
                g = m.from_mont(q).gcd(&n);
                k += lim;
                if *budget <= lim {
                    return None;
                }
                *budget -= lim;
            }
            r <<= 1;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = m.from_mont(x.abs_diff(ys)).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return Some(g);
        }
    }
    None
}

/// Plain big-integer rho for residues above 128 bits. Slow; used with small budgets.
pub fn rho_big(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    if let Some(v) = n.to_u128() {
        return rho_u128(v, budget).map(BigUint::from);
    }
    if !n.bit(0) {
        return Some(BigUint::from(2u32));
    }
    for c0 in 1u32.. {
        let c = BigUint::from(c0);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut r = 1u64;
        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                let lim = BATCH.min(r - k);
                for _ in 0..lim {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = (q * diff) % n;
                }
                g = q.gcd(n);
                k += lim;
                if *budget <= lim {
                    return None;
                }
                *budget -= lim;
            }
            r <<= 1;
        }
        if &g == n {
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if &g != n && !g.is_zero() {
            return Some(g);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_semiprimes() {
        let mut b = u64::MAX;
        let n = 1_000_003u64 * 999_983;
        let f = rho_u64(n, &mut b).unwrap();
        assert!(f == 1_000_003 || f == 999_983);

        let p = 4_294_967_311u128;
        let q = 18_446_744_073_709_551_629u128;
        let n = p * q;
        let mut b = u64::MAX;
        let f = rho_u128(n, &mut b).unwrap();
        assert!(f == p || f == q);
    }

    #[test]
    fn budget_is_respected() {
        // product of two ~40-bit primes needs far more than 50 steps
        let n = 1_099_511_627_791u64 as u128 * 1_099_511_628_401u64 as u128;
        let mut b = 50;
        assert!(rho_u128(n, &mut b).is_none());
    }

    #[test]
    fn big_rho_small_factor() {
        let n = ((BigUint::one() << 127u32) - 1u32) * 1_000_003u32;
        let mut b = 1 << 20;
        let f = rho_big(&n, &mut b).unwrap();
        assert!(f == BigUint::from(1_000_003u32) || f == (BigUint::one() << 127u32) - 1u32);
    }
}
