use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::mont::{Mont128, Mont64};

/// Primes below this bound are held in a shared table.
pub const SMALL_PRIME_LIMIT: u32 = 1 << 20;

// deterministic for n < 3.317e24 with the first 13 prime bases
const MR_PRIME_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
const MR_DETERMINISTIC_LIMIT: u128 = 3_317_044_064_679_887_385_961_981;
// 64 rounds in total keep the error below 2^-128 past the deterministic range
const MR_EXTRA_ROUNDS: usize = 51;

pub fn sieve(limit: u32) -> Vec<u32> {
    let n = limit as usize;
    if n < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; n];
    let mut out = Vec::with_capacity(n / 10);
    let mut i = 2;
    while i < n {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j < n {
                composite[j] = true;
                j += i;
            }
        }
        i += 1;
    }
    out
}

pub fn small_primes() -> &'static [u32] {
    static TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    TABLE.get_or_init(|| sieve(SMALL_PRIME_LIMIT))
}

/// Primes p <= limit with p ≡ 1 (mod d), plus the prime divisors of d.
/// These are the only candidates for divisors of the cyclotomic value Φ_d(q).
pub fn cyclotomic_candidates(d: u64, limit: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut dd = d;
    for &p in small_primes() {
        let p = p as u64;
        if p * p > dd {
            break;
        }
        if dd % p == 0 {
            out.push(p);
            while dd % p == 0 {
                dd /= p;
            }
        }
    }
    if dd > 1 {
        out.push(dd);
    }
    if limit < SMALL_PRIME_LIMIT as u64 {
        out.extend(
            small_primes()
                .iter()
                .map(|&p| p as u64)
                .take_while(|&p| p <= limit)
                .filter(|&p| p % d == 1),
        );
    } else {
        out.extend(small_primes().iter().map(|&p| p as u64).filter(|&p| p % d == 1));
        let mut c = (SMALL_PRIME_LIMIT as u64 / d + 1) * d + 1;
        while c <= limit {
            if is_prime_u64(c) {
                out.push(c);
            }
            c += d;
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_PRIME_BASES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 43 * 43 {
        return true;
    }
    let m = Mont64::new(n);
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    let one = m.one();
    let minus_one = m.to_mont(n - 1);
    // 7 bases are deterministic below 2^64
    'outer: for &a in &[2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = m.pow(m.to_mont(a), d);
        if x == one || x == minus_one {
            continue;
        }
        for _ in 1..s {
            x = m.mul(x, x);
            if x == minus_one {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn strong_probable_prime_u128(m: &Mont128, n: u128, a: u128) -> bool {
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    let one = m.one();
    let minus_one = m.to_mont(n - 1);
    let mut x = m.pow(m.to_mont(a % n), d);
    if x == one || x == minus_one {
        return true;
    }
    for _ in 1..s {
        x = m.mul(x, x);
        if x == minus_one {
            return true;
        }
    }
    false
}

pub fn is_prime_u128(n: u128) -> bool {
    if n <= u64::MAX as u128 {
        return is_prime_u64(n as u64);
    }
    if n & 1 == 0 {
        return false;
    }
    for &p in small_primes().iter().take(200) {
        if n % p as u128 == 0 {
            return false;
        }
    }
    let m = Mont128::new(n);
    for &a in &MR_PRIME_BASES {
        if !strong_probable_prime_u128(&m, n, a as u128) {
            return false;
        }
    }
    if n < MR_DETERMINISTIC_LIMIT {
        return true;
    }
    let mut state = 0x5eed_u64 ^ (n as u64);
    for _ in 0..MR_EXTRA_ROUNDS {
        let a = 2 + ((splitmix(&mut state) as u128) << 64 | splitmix(&mut state) as u128) % (n - 3);
        if !strong_probable_prime_u128(&m, n, a) {
            return false;
        }
    }
    true
}

pub fn is_prime_big(n: &BigUint) -> bool {
    if let Some(v) = n.to_u128() {
        return is_prime_u128(v);
    }
    if !n.bit(0) {
        return false;
    }
    for &p in small_primes().iter().take(500) {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let spp = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x == one || x == nm1 {
            return true;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == nm1 {
                return true;
            }
        }
        false
    };
    for &a in &MR_PRIME_BASES {
        if !spp(&BigUint::from(a)) {
            return false;
        }
    }
    let mut state = 0x5eed_u64 ^ n.iter_u64_digits().next().unwrap_or(0);
    let span = n - 3u32;
    for _ in 0..MR_EXTRA_ROUNDS {
        let mut words = Vec::new();
        for _ in 0..(n.bits() / 64 + 1) {
            words.push(splitmix(&mut state));
        }
        let a = BigUint::from_slice(
            &words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<_>>(),
        ) % &span
            + 2u32;
        if !spp(&a) {
            return false;
        }
    }
    true
}

pub fn next_prime_u64(mut n: u64) -> u64 {
    loop {
        n += 1;
        if is_prime_u64(n) {
            return n;
        }
    }
}

/// Prime powers q with lo ≤ q < hi, ascending. Odd-only bit sieve, so hi in
/// the tens of millions costs a few megabytes.
pub fn prime_powers_in(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= 2 {
        return Vec::new();
    }
    let odd = ((hi + 1) / 2) as usize; // bit i stands for 2i+1
    let mut comp = vec![0u64; odd / 64 + 1];
    let is_comp = |c: &Vec<u64>, i: usize| c[i >> 6] >> (i & 63) & 1 == 1;
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) < hi as usize {
        if !is_comp(&comp, i) {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < odd {
                comp[j >> 6] |= 1 << (j & 63);
                j += p;
            }
        }
        i += 1;
    }
    let mut out = Vec::new();
    let mut push_powers = |p: u64| {
        let mut x = p;
        loop {
            if x >= lo {
                out.push(x);
            }
            match x.checked_mul(p) {
                Some(y) if y < hi => x = y,
                _ => break,
            }
        }
    };
    push_powers(2);
    for i in 1..odd {
        if 2 * i as u64 + 1 >= hi {
            break;
        }
        if !is_comp(&comp, i) {
            push_powers(2 * i as u64 + 1);
        }
    }
    out.sort_unstable();
    out
}
