//! Positive integer exponents that may exceed any machine integer.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;
const EXACT_BITS: u64 = 53;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent(BigUint);

impl Exponent {
    pub fn one() -> Self {
        Exponent(BigUint::one())
    }

    pub fn new(value: BigUint) -> Result<Self> {
        if value.is_zero() {
            return Err(Error::Invalid("exponent must be positive".into()));
        }
        Ok(Exponent(value))
    }

    pub fn from_u64(n: u64) -> Result<Self> {
        Self::new(BigUint::from(n))
    }

    /// Nearest integer to a finite `x >= 0.5`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.5 {
            return Err(Error::NumericalRange { context: "exponent", value: x });
        }
        let r = x.round();
        if r < (1u64 << EXACT_BITS) as f64 {
            return Self::from_u64(r as u64);
        }
        let bits = r.to_bits();
        let mantissa = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
        let shift = ((bits >> 52) & 0x7ff) as i64 - 1075;
        Self::new(BigUint::from(mantissa) << (shift as usize))
    }

    /// An integer within relative distance `2^-52` of `exp(log_value)`, at least one.
    pub fn from_ln(log_value: f64) -> Self {
        if !(log_value > 0.0) {
            return Self::one();
        }
        let bits = log_value / LN_2;
        if bits < EXACT_BITS as f64 {
            return Self::from_f64(log_value.exp().max(1.0)).expect("finite below 2^53");
        }
        let whole = bits.floor();
        let mantissa = (bits - whole + 52.0).exp2().round() as u64;
        let shift = whole as usize - 52;
        Exponent(BigUint::from(mantissa) << shift)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn ln(&self) -> f64 {
        let bits = self.0.bits();
        if bits <= 64 {
            return (self.0.to_u64().expect("fits") as f64).ln();
        }
        let shift = bits - 64;
        let top = (&self.0 >> shift).to_u64().expect("64 bits");
        (top as f64).ln() + shift as f64 * LN_2
    }

    pub fn digits(&self) -> usize {
        self.0.to_str_radix(10).len()
    }

    pub fn product(&self, other: &Exponent) -> Exponent {
        Exponent(&self.0 * &other.0)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
