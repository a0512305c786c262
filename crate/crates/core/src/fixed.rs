//! 128-bit fixed-point real scalars.
//!
//! Frequencies are ingested either as exact rationals or as decimal strings
//! rounded once to a fraction with denominator 2^128. All later phase
//! arithmetic happens on that representative, so arc-classification
//! comparisons are exact and the summation engine can reduce phases mod 1
//! with wrapping `u128` multiplies instead of big-integer products.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `value = int + frac / 2^128`, with `frac` in `[0, 2^128)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedReal {
    int: i64,
    frac: u128,
}

impl FixedReal {
    pub const ZERO: FixedReal = FixedReal { int: 0, frac: 0 };

    pub fn new(int: i64, frac: u128) -> Self {
        Self { int, frac }
    }

    pub fn is_zero(&self) -> bool {
        self.int == 0 && self.frac == 0
    }

    /// Fractional bits; the integer part never influences a phase mod 1.
    pub fn frac_bits(&self) -> u128 {
        self.frac
    }

    pub fn int_part(&self) -> i64 {
        self.int
    }

    /// Exact conversion from a double. Fraction bits below 2^-128 are
    /// rounded to nearest.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "fixed-point input must be finite");
        let int = x.floor();
        assert!(
            int >= i64::MIN as f64 && int <= i64::MAX as f64,
            "integer part out of range"
        );
        let f = x - int; // in [0, 1), exactly representable
        let hi = (f * 2f64.powi(64)).floor();
        let rem = f * 2f64.powi(64) - hi;
        let lo = (rem * 2f64.powi(64)).round();
        debug_assert!(lo < 2f64.powi(64));
        let frac = ((hi as u128) << 64) + lo as u128;
        Self {
            int: int as i64,
            frac,
        }
    }

    /// Nearest fixed-point value to `num/den`; ties round up.
    pub fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        let int = num.div_floor(&den);
        let rem = (num - &int * &den).to_biguint().unwrap(); // in [0, den)
        let uden = den.to_biguint().unwrap();
        let frac2 = ((rem << 129u32) + &uden) / (&uden << 1u32); // round-to-nearest of rem*2^128/den
        let int_i64 = int.to_i64().expect("integer part out of range");
        if frac2.bits() > 128 {
            Self {
                int: int_i64.checked_add(1).expect("integer part out of range"),
                frac: 0,
            }
        } else {
            Self {
                int: int_i64,
                frac: frac2.to_u128().unwrap(),
            }
        }
    }

    /// Parses a plain decimal like `-0.125` or `3` and rounds once to the
    /// nearest representable value.
    pub fn parse_decimal(text: &str) -> Result<Self, String> {
        let s = text.trim();
        let (neg, s) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (ip, fp) = match s.split_once('.') {
            Some((a, b)) => (a, b),
            None => (s, ""),
        };
        if ip.is_empty() && fp.is_empty() {
            return Err(format!("invalid decimal literal {text:?}"));
        }
        if !ip.bytes().all(|b| b.is_ascii_digit()) || !fp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid decimal literal {text:?}"));
        }
        let ip: BigUint = if ip.is_empty() {
            BigUint::zero()
        } else {
            ip.parse().unwrap()
        };
        let digits: BigUint = if fp.is_empty() {
            BigUint::zero()
        } else {
            fp.parse().unwrap()
        };
        let ten_k = BigUint::from(10u32).pow(fp.len() as u32);
        // round(digits * 2^128 / 10^k)
        let frac2 = ((digits << 129u32) + &ten_k) / (&ten_k << 1u32);
        let (ip, frac) = if frac2.bits() > 128 {
            (ip + 1u32, 0u128)
        } else {
            (ip, frac2.to_u128().unwrap())
        };
        let value = Self {
            int: ip.to_i64().ok_or("integer part out of range")?,
            frac,
        };
        Ok(if neg { value.neg() } else { value })
    }

    /// Exact rational value of this representative.
    pub fn to_rational(&self) -> BigRational {
        let num = BigInt::from(self.int) * (BigInt::one() << 128u32) + BigInt::from(self.frac);
        BigRational::new(num, BigInt::one() << 128u32)
    }

    pub fn neg(&self) -> Self {
        if self.frac == 0 {
            Self {
                int: -self.int,
                frac: 0,
            }
        } else {
            Self {
                int: -self.int - 1,
                frac: (u128::MAX - self.frac).wrapping_add(1),
            }
        }
    }

    pub fn approx_f64(&self) -> f64 {
        self.int as f64 + frac_to_f64(self.frac)
    }
}

/// Top bits of a mod-1 fraction as a double in `[0, 1)`.
pub fn frac_to_f64(frac: u128) -> f64 {
    (frac >> 64) as f64 * 2f64.powi(-64) + (frac as u64) as f64 * 2f64.powi(-128)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip_exact_dyadics() {
        for x in [0.0, 0.5, -0.25, 3.75, -2.0, 0.123, -0.123] {
            let f = FixedReal::from_f64(x);
            assert!((f.approx_f64() - x).abs() < 1e-18, "{x}");
        }
        assert_eq!(FixedReal::from_f64(0.5).frac_bits(), 1u128 << 127);
        assert_eq!(FixedReal::from_f64(-0.5).int_part(), -1);
        assert_eq!(FixedReal::from_f64(-0.5).frac_bits(), 1u128 << 127);
    }

    #[test]
    fn decimal_parse_matches_ratio() {
        let a = FixedReal::parse_decimal("0.3").unwrap();
        let b = FixedReal::from_ratio(&BigInt::from(3), &BigInt::from(10));
        assert_eq!(a, b);
        let a = FixedReal::parse_decimal("-1.25").unwrap();
        let b = FixedReal::from_ratio(&BigInt::from(-5), &BigInt::from(4));
        assert_eq!(a, b);
        assert_eq!(a.int_part(), -2);
        let exact = FixedReal::parse_decimal("2").unwrap();
        assert_eq!(exact, FixedReal::new(2, 0));
    }

    #[test]
    fn rational_value_roundtrip() {
        let x = FixedReal::from_ratio(&BigInt::from(1), &BigInt::from(3));
        let r = x.to_rational();
        // |1/3 - representative| <= 2^-129
        let err = (r - BigRational::new(BigInt::from(1), BigInt::from(3))).abs();
        let bound = BigRational::new(BigInt::one(), BigInt::one() << 129u32);
        assert!(err <= bound);
    }

    #[test]
    fn neg_is_involutive_and_exact() {
        for x in ["0.3", "-0.7", "2.5", "0"] {
            let f = FixedReal::parse_decimal(x).unwrap();
            assert_eq!(f.neg().neg(), f);
            let sum = f.to_rational() + f.neg().to_rational();
            assert!(sum.is_zero());
        }
    }
}
