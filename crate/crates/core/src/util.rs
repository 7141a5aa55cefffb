/// Serde helpers that write big integers as decimal strings.
pub mod dec {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }

    pub mod pairs {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[(BigUint, u32)], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for (p, e) in v {
                seq.serialize_element(&(p.to_str_radix(10), *e))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(BigUint, u32)>, D::Error> {
            let raw: Vec<(String, u32)> = Vec::deserialize(d)?;
            raw.into_iter()
                .map(|(p, e)| p.parse().map(|p| (p, e)).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod list {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for p in v {
                seq.serialize_element(&p.to_str_radix(10))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
            let raw: Vec<String> = Vec::deserialize(d)?;
            raw.into_iter().map(|p| p.parse().map_err(D::Error::custom)).collect()
        }
    }
}

/// Serde helpers for exact rationals written as "num/den".
pub mod ratio {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", v.numer(), v.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        let (n, dd) = s.split_once('/').ok_or_else(|| D::Error::custom("expected num/den"))?;
        let n: BigInt = n.parse().map_err(D::Error::custom)?;
        let dd: BigInt = dd.parse().map_err(D::Error::custom)?;
        Ok(BigRational::new(n, dd))
    }
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Multiplicative order of q modulo n (gcd(q,n)=1, n ≥ 1).
pub fn ord_mod(q: u64, n: u64) -> u64 {
    if n == 1 {
        return 1;
    }
    let qm = q % n;
    let mut x = qm;
    let mut k = 1;
    while x != 1 {
        x = ((x as u128 * qm as u128) % n as u128) as u64;
        k += 1;
    }
    k
}
