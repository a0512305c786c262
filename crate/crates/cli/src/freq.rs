//! Frequency-scalar parsing: `a/q` exact rationals or decimal strings
//! rounded once to 128-bit fixed point.

use anyhow::{bail, Context, Result};
use dhilbert::expsum::PhaseContext;
use dhilbert::fixed::FixedReal;
use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Debug, Clone)]
pub enum Scalar {
    Rational { num: i64, den: u64 },
    Fixed(FixedReal),
}

impl Scalar {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some((a, q)) = t.split_once('/') {
            let num: i64 = a.trim().parse().context("rational numerator")?;
            let den: u64 = q.trim().parse().context("rational denominator")?;
            if den == 0 {
                bail!("zero denominator in {t:?}");
            }
            Ok(Scalar::Rational { num, den })
        } else {
            let f = FixedReal::parse_decimal(t).map_err(anyhow::Error::msg)?;
            Ok(Scalar::Fixed(f))
        }
    }

    pub fn to_fixed(&self) -> FixedReal {
        match *self {
            Scalar::Rational { num, den } => {
                FixedReal::from_ratio(&BigInt::from(num), &BigInt::from(den))
            }
            Scalar::Fixed(f) => f,
        }
    }

    /// Exact rational value of the scalar as ingested (the fixed-point
    /// representative for decimals).
    pub fn to_rational(&self) -> BigRational {
        match *self {
            Scalar::Rational { num, den } => {
                BigRational::new(BigInt::from(num), BigInt::from(den))
            }
            Scalar::Fixed(f) => f.to_rational(),
        }
    }

    /// Human-readable exact form for the "representable value used" note.
    pub fn exact_note(&self) -> String {
        match *self {
            Scalar::Rational { num, den } => format!("{num}/{den}"),
            Scalar::Fixed(f) => {
                format!("{} (fixed-point)", f.to_rational())
            }
        }
    }
}

/// Builds the phase context from three scalars; a rational third scalar is
/// carried exactly through the split surface frequency.
pub fn phase_context(xi: &[Scalar; 3]) -> PhaseContext {
    let x1 = xi[0].to_fixed();
    let x2 = xi[1].to_fixed();
    match xi[2] {
        Scalar::Rational { num, den } => PhaseContext::with_rational_xi3(x1, x2, num, den),
        Scalar::Fixed(f) => PhaseContext::from_fixed(x1, x2, f),
    }
}

pub fn parse_triple(text: &str) -> Result<[Scalar; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("expected three comma-separated frequencies, got {text:?}");
    }
    Ok([
        Scalar::parse(parts[0])?,
        Scalar::parse(parts[1])?,
        Scalar::parse(parts[2])?,
    ])
}
