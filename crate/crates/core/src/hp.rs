//! High-precision reals for inequality transcripts and threshold constants.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Signed;

/// Working precision in bits.
pub const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;
// Correct rounding of ln/exp/pow retries forever on exact results such as 4^0.5.
const TRM: RoundingMode = RoundingMode::None;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

#[derive(Clone, Debug)]
pub struct Real(BigFloat);

impl Real {
    pub fn from_u64(v: u64) -> Self {
        Real(BigFloat::from_u64(v, PREC))
    }

    pub fn from_i64(v: i64) -> Self {
        Real(BigFloat::from_i64(v, PREC))
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        let mut acc = BigFloat::from_u64(0, PREC);
        let base = BigFloat::from_u64(1 << 32, PREC);
        for d in v.to_u32_digits().iter().rev() {
            acc = acc.mul(&base, PREC, RM).add(&BigFloat::from_u32(*d, PREC), PREC, RM);
        }
        Real(acc)
    }

    pub fn from_ratio(r: &BigRational) -> Self {
        let n = Real::from_biguint(r.numer().magnitude());
        let d = Real::from_biguint(r.denom().magnitude());
        let v = n.div(&d);
        if r.is_negative() {
            v.neg()
        } else {
            v
        }
    }

    /// Parses a decimal literal such as "7.7" at full precision.
    pub fn parse(s: &str) -> Option<Self> {
        let v = with_cc(|cc| BigFloat::parse(s, Radix::Dec, PREC, RM, cc));
        (!v.is_nan()).then_some(Real(v))
    }

    pub fn add(&self, o: &Real) -> Real {
        Real(self.0.add(&o.0, PREC, RM))
    }

    pub fn sub(&self, o: &Real) -> Real {
        Real(self.0.sub(&o.0, PREC, RM))
    }

    pub fn mul(&self, o: &Real) -> Real {
        Real(self.0.mul(&o.0, PREC, RM))
    }

    pub fn div(&self, o: &Real) -> Real {
        Real(self.0.div(&o.0, PREC, RM))
    }

    pub fn neg(&self) -> Real {
        Real(self.0.neg())
    }

    pub fn ln(&self) -> Real {
        Real(with_cc(|cc| self.0.ln(PREC, TRM, cc)))
    }

    pub fn exp(&self) -> Real {
        Real(with_cc(|cc| self.0.exp(PREC, TRM, cc)))
    }

    pub fn pow(&self, e: &Real) -> Real {
        Real(with_cc(|cc| self.0.pow(&e.0, PREC, TRM, cc)))
    }

    pub fn powi(&self, n: usize) -> Real {
        Real(self.0.powi(n, PREC, RM))
    }

    pub fn log10(&self) -> Real {
        self.ln().div(&Real::from_u64(10).ln())
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    /// Decimal string with full working precision.
    pub fn to_decimal(&self) -> String {
        with_cc(|cc| self.0.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".into())
    }

    /// Splits into (sign, digit string without dot, decimal exponent of the first digit).
    fn digits(&self) -> Option<(bool, String, i64)> {
        let s = self.to_decimal();
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b.to_string()),
            None => (false, s),
        };
        let (mant, exp) = body.split_once('e').unwrap_or((body.as_str(), "0"));
        let exp: i64 = exp.parse().ok()?;
        let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
        let mut digits = format!("{int}{frac}");
        let mut e = exp + int.len() as i64 - 1;
        // strip leading zeros (zero value keeps a single digit)
        while digits.len() > 1 && digits.starts_with('0') {
            digits.remove(0);
            e -= 1;
        }
        Some((neg, digits, e))
    }

    /// Scientific notation with `sig` significant digits, rounded to nearest.
    pub fn sci(&self, sig: usize) -> String {
        self.sci_rounded(sig, Ordering::Equal)
    }

    /// Scientific notation with the last digit rounded up (`Greater`), down
    /// (`Less`) or to nearest (`Equal`) in magnitude.
    pub fn sci_rounded(&self, sig: usize, dir: Ordering) -> String {
        let Some((neg, digits, mut e)) = self.digits() else {
            return "NaN".into();
        };
        if self.0.is_zero() {
            return "0".into();
        }
        let sig = sig.max(1);
        let mut keep: Vec<u8> = digits.bytes().take(sig).map(|b| b - b'0').collect();
        while keep.len() < sig {
            keep.push(0);
        }
        let rest: Vec<u8> = digits.bytes().skip(sig).map(|b| b - b'0').collect();
        let bump = match dir {
            Ordering::Greater => rest.iter().any(|&d| d != 0),
            Ordering::Less => false,
            Ordering::Equal => rest.first().map(|&d| d >= 5).unwrap_or(false),
        };
        if bump {
            let mut i = keep.len();
            loop {
                if i == 0 {
                    keep.insert(0, 1);
                    keep.pop();
                    e += 1;
                    break;
                }
                i -= 1;
                if keep[i] == 9 {
                    keep[i] = 0;
                } else {
                    keep[i] += 1;
                    break;
                }
            }
        }
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push((b'0' + keep[0]) as char);
        if keep.len() > 1 {
            out.push('.');
            for d in &keep[1..] {
                out.push((b'0' + d) as char);
            }
        }
        out.push_str(&format!("e{e}"));
        out
    }

    /// Closest f64 (infinite when out of range).
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        match self.digits() {
            Some((neg, digits, e)) => {
                let v: f64 = format!("{}.{}e{}", &digits[..1], &digits[1..], e).parse().unwrap_or(f64::NAN);
                if neg {
                    -v
                } else {
                    v
                }
            }
            None => f64::NAN,
        }
    }

    /// Smallest integer ≥ self, for positive values below 2^63.
    pub fn ceil_u64(&self) -> u64 {
        let mut c = self.to_f64().ceil().max(0.0) as u64;
        while c > 0 && Real::from_u64(c - 1) >= *self {
            c -= 1;
        }
        while Real::from_u64(c) < *self {
            c += 1;
        }
        c
    }

    /// Largest integer ≤ self, for non-negative values below 2^63.
    pub fn floor_u64(&self) -> u64 {
        let c = self.ceil_u64();
        if Real::from_u64(c) == *self {
            c
        } else {
            c.saturating_sub(1)
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, o: &Self) -> bool {
        self.partial_cmp(o) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.0.cmp(&o.0).map(|c| c.cmp(&0))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sci(12))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parse_is_exact_enough() {
        let r = Real::parse("7.7").unwrap();
        let ten = Real::from_u64(10);
        let seventy_seven = Real::from_u64(77);
        let diff = r.mul(&ten).sub(&seventy_seven);
        assert!(diff.to_f64().abs() < 1e-70);
    }

    #[test]
    fn sci_rounding_modes() {
        let v = Real::from_u64(27_413_600);
        assert_eq!(v.sci(3), "2.74e7");
        assert_eq!(v.sci_rounded(3, Ordering::Greater), "2.75e7");
        assert_eq!(Real::from_u64(999_999).sci(2), "1.0e6");
        assert_eq!(Real::from_u64(5).sci(1), "5e0");
    }

    #[test]
    fn big_integers_roundtrip() {
        let n: BigUint = "340282366920938463463374607431768211457".parse().unwrap();
        let r = Real::from_biguint(&n);
        assert_eq!(r.sci(5), "3.4028e38");
        assert_eq!(Real::from_u64(61428).ceil_u64(), 61428);
        assert_eq!(Real::parse("61428.0001").unwrap().ceil_u64(), 61429);
        assert_eq!(Real::parse("61428.9").unwrap().floor_u64(), 61428);
    }

    #[test]
    fn transcendental() {
        let e = Real::from_u64(1).exp();
        assert!((e.to_f64() - std::f64::consts::E).abs() < 1e-15);
        let p = Real::from_u64(2).pow(&Real::parse("0.5").unwrap());
        assert!((p.to_f64() - 2f64.sqrt()).abs() < 1e-15);
    }
}
