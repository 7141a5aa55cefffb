//! Process-wide memo of completed cofactor splits. Entries are checked before they
//! are accepted (product and primality), and lookups happen only where rho would
//! otherwise run, so a hit returns exactly what rho would have found.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use num_bigint::BigUint;
use num_traits::One;

use super::primes::is_prime_big;

/// Cofactors below this are cheap enough to redo.
const MIN_CACHED_BITS: u64 = 64;

static TABLE: RwLock<Option<HashMap<BigUint, Vec<(BigUint, u32)>>>> = RwLock::new(None);
static HITS: AtomicU64 = AtomicU64::new(0);
static INSERTS: AtomicU64 = AtomicU64::new(0);

/// Turns the cache on (empty). Without this, lookups and inserts are no-ops.
pub fn enable() {
    let mut t = TABLE.write().unwrap();
    if t.is_none() {
        *t = Some(HashMap::new());
    }
}

pub fn disable() {
    *TABLE.write().unwrap() = None;
}

pub fn is_enabled() -> bool {
    TABLE.read().unwrap().is_some()
}

/// Does the claimed factorization multiply back to n with prime bases?
pub fn verify(n: &BigUint, factors: &[(BigUint, u32)]) -> bool {
    let mut prod = BigUint::one();
    for (p, e) in factors {
        if *e == 0 || !is_prime_big(p) {
            return false;
        }
        prod *= p.pow(*e);
    }
    prod == *n
}

/// Adds an entry after verification. Returns false (and stores nothing) if it fails.
pub fn insert_verified(n: BigUint, mut factors: Vec<(BigUint, u32)>) -> bool {
    if !verify(&n, &factors) {
        return false;
    }
    factors.sort();
    if let Some(t) = TABLE.write().unwrap().as_mut() {
        t.insert(n, factors);
    }
    true
}

pub(crate) fn lookup(n: &BigUint) -> Option<Vec<(BigUint, u32)>> {
    if n.bits() < MIN_CACHED_BITS {
        return None;
    }
    let hit = TABLE.read().unwrap().as_ref()?.get(n).cloned();
    if hit.is_some() {
        HITS.fetch_add(1, Ordering::Relaxed);
    }
    hit
}

pub(crate) fn record(n: &BigUint, factors: &[(BigUint, u32)]) {
    if n.bits() < MIN_CACHED_BITS {
        return;
    }
    if let Some(t) = TABLE.write().unwrap().as_mut() {
        if t.insert(n.clone(), factors.to_vec()).is_none() {
            INSERTS.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// All entries, sorted by n.
pub fn entries() -> Vec<(BigUint, Vec<(BigUint, u32)>)> {
    let mut v: Vec<_> =
        TABLE.read().unwrap().as_ref().map(|t| t.iter().map(|(k, f)| (k.clone(), f.clone())).collect()).unwrap_or_default();
    v.sort();
    v
}

/// (hits, new entries) since start.
pub fn stats() -> (u64, u64) {
    (HITS.load(Ordering::Relaxed), INSERTS.load(Ordering::Relaxed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verification_rules() {
        let n = BigUint::from(255u32);
        let good = vec![(BigUint::from(3u32), 1), (BigUint::from(5u32), 1), (BigUint::from(17u32), 1)];
        assert!(verify(&n, &good));
        let tampered = vec![(BigUint::from(3u32), 1), (BigUint::from(85u32), 1)];
        assert!(!verify(&n, &tampered));
        let wrong = vec![(BigUint::from(3u32), 1), (BigUint::from(5u32), 1), (BigUint::from(19u32), 1)];
        assert!(!verify(&n, &wrong));
    }
}
