//! Two-parameter circle-method classification of dyadic indices.
//!
//! For each index `j` (with `j1 >= j2`) the denominator `q = q(j, xi)` and
//! residual `beta` decide the cell's regime:
//!
//! * major sharp  — `q <= 2^{j2/10}`, `|beta| 2^{j.m} >= 2^{j2/10}`
//! * major flat   — `q <= 2^{j2/10}`, `|beta| 2^{j.m} <  2^{j2/10}`
//! * minor        — otherwise, `q >= 2^{j1/10}`
//! * major-minor  — otherwise
//!
//! All threshold comparisons are exact (tenth powers of integers against
//! powers of two), and the order above resolves every boundary tie, so the
//! four sets form a strict partition.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::rational::{q_of, RationalApprox, RationalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ArcClass {
    Minor,
    MajorMinor,
    MajorSharp,
    MajorFlat,
}

impl ArcClass {
    pub fn label(&self) -> &'static str {
        match self {
            ArcClass::Minor => "minor",
            ArcClass::MajorMinor => "major_minor",
            ArcClass::MajorSharp => "major_sharp",
            ArcClass::MajorFlat => "major_flat",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcReport {
    pub j: (u64, u64),
    pub klass: ArcClass,
    pub approx: RationalApprox,
    /// `|beta| * 2^{j.m}` as a double, for reporting.
    pub beta_scaled: f64,
}

/// Classifies one index. Requires `j1 >= j2` (the reduced half of the index
/// set); classify the symmetric half by swapping roles.
pub fn classify(
    j: (u64, u64),
    xi3: &BigRational,
    vertex: (u32, u32),
) -> Result<ArcReport, RationalError> {
    assert!(j.0 >= j.1, "classification requires j1 >= j2");
    let approx = q_of(j, xi3, vertex)?;
    let jm = j.0 as i64 * vertex.0 as i64 + j.1 as i64 * vertex.1 as i64;
    // Major is tested first so that the double tie q = 2^{j1/10} = 2^{j2/10}
    // (possible only at j1 = j2) lands in the major class; q = 1 cells are
    // then major-flat at every index.
    let klass = if tenth_power_at_most(&approx.q, j.1) {
        // q <= 2^{j2/10}: split on the scaled frequency
        if beta_scaled_at_least(&approx.beta, jm, j.1) {
            ArcClass::MajorSharp
        } else {
            ArcClass::MajorFlat
        }
    } else if !tenth_power_below(&approx.q, j.0) {
        // q >= 2^{j1/10}
        ArcClass::Minor
    } else {
        ArcClass::MajorMinor
    };
    let beta_scaled = scaled_beta_f64(&approx.beta, jm);
    Ok(ArcReport {
        j,
        klass,
        approx,
        beta_scaled,
    })
}

/// `q < 2^{j/10}`  <=>  `q^10 < 2^j`.
fn tenth_power_below(q: &BigInt, j: u64) -> bool {
    q.pow(10) < (BigInt::one() << j)
}

/// `q <= 2^{j/10}`  <=>  `q^10 <= 2^j`.
fn tenth_power_at_most(q: &BigInt, j: u64) -> bool {
    q.pow(10) <= (BigInt::one() << j)
}

/// `|beta| 2^{jm} >= 2^{j2/10}`  <=>  `|num|^10 2^{10 jm} >= den^10 2^{j2}`.
fn beta_scaled_at_least(beta: &BigRational, jm: i64, j2: u64) -> bool {
    let num = beta.numer().abs().pow(10);
    let den = beta.denom().pow(10);
    // shift exponents onto whichever side keeps them nonnegative
    let lhs_exp = 10 * jm - j2 as i64;
    if lhs_exp >= 0 {
        num << lhs_exp as u64 >= den
    } else {
        num >= den << (-lhs_exp) as u64
    }
}

fn scaled_beta_f64(beta: &BigRational, jm: i64) -> f64 {
    if beta.is_zero() {
        return 0.0;
    }
    let num = beta.numer().abs();
    let den = beta.denom().clone();
    // |beta| 2^jm in log2 to survive huge exponents
    let log2 = bits_f64(&num) - bits_f64(&den) + jm as f64;
    2f64.powf(log2)
}

fn bits_f64(x: &BigInt) -> f64 {
    let b = x.bits();
    if b <= 53 {
        x.to_f64().unwrap().abs().log2()
    } else {
        let top: BigInt = x >> (b - 53);
        top.to_f64().unwrap().abs().log2() + (b - 53) as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionCounts {
    pub minor: usize,
    pub major_minor: usize,
    pub major_sharp: usize,
    pub major_flat: usize,
}

#[derive(Debug, Clone)]
pub struct GridPartition {
    pub cells: Vec<ArcReport>,
    pub counts: PartitionCounts,
}

/// Classifies every `j` in `{0..=j1_max} x {0..=j2_max}` with `j1 >= j2`.
/// Rows are classified in parallel; output order is row-major and
/// deterministic.
pub fn partition_grid(
    xi3: &BigRational,
    vertex: (u32, u32),
    j1_max: u64,
    j2_max: u64,
) -> Result<GridPartition, RationalError> {
    let rows: Result<Vec<Vec<ArcReport>>, RationalError> = (0..=j1_max)
        .into_par_iter()
        .map(|j1| {
            (0..=j2_max.min(j1))
                .map(|j2| classify((j1, j2), xi3, vertex))
                .collect()
        })
        .collect();
    let cells: Vec<ArcReport> = rows?.into_iter().flatten().collect();
    let mut counts = PartitionCounts {
        minor: 0,
        major_minor: 0,
        major_sharp: 0,
        major_flat: 0,
    };
    for c in &cells {
        match c.klass {
            ArcClass::Minor => counts.minor += 1,
            ArcClass::MajorMinor => counts.major_minor += 1,
            ArcClass::MajorSharp => counts.major_sharp += 1,
            ArcClass::MajorFlat => counts.major_flat += 1,
        }
    }
    Ok(GridPartition { cells, counts })
}
