//! The tower F_p ⊂ F_q ⊂ F_{q^m} and element arithmetic.

mod base;
mod ext;

pub use base::{BaseField, LogTables, MAX_TABLE_FIELD};
pub use ext::{FFElem, FieldCtx, FieldId, DEFAULT_ENUM_CEILING};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::factor_u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
    #[error("extension degree must be at least 1")]
    DegreeZero,
    #[error("division by zero")]
    DivisionByZero,
    #[error("element belongs to a different field")]
    CtxMismatch,
    #[error("zero element has no multiplicative order")]
    ZeroElement,
    #[error("invalid element coefficients {0}")]
    InvalidElement(String),
    #[error("field too large: {0}")]
    FieldTooLarge(String),
    #[error(transparent)]
    Arith(#[from] crate::arith::ArithError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimePower {
    pub p: u64,
    pub s: u32,
    pub q: u64,
}

impl PrimePower {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        let f = factor_u64(q);
        match f.as_slice() {
            [(p, s)] => Ok(PrimePower { p: *p, s: *s, q }),
            _ => Err(FieldError::NotAPrimePower(q)),
        }
    }
}

pub fn is_prime_power(q: u64) -> bool {
    PrimePower::new(q).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_powers() {
        assert_eq!(PrimePower::new(8).unwrap(), PrimePower { p: 2, s: 3, q: 8 });
        assert_eq!(PrimePower::new(6), Err(FieldError::NotAPrimePower(6)));
        assert_eq!(PrimePower::new(1), Err(FieldError::NotAPrimePower(1)));
        assert!(is_prime_power(27_000_017) == crate::arith::is_prime_u64(27_000_017));
    }
}
