//! Complete exponential sums over residue classes: fiberwise Gauss sums
//! `S^{t2}(a/q)`, their dyadic averages, the two-dimensional twisted sum
//! `S_w(a/q)`, exhaustive congruence-root counting, and power-law decay
//! fitting for the `q^{-delta}` estimates.
//!
//! Arguments are reduced to exact residues before touching floating point:
//! each sum works off a single roots-of-unity table of length `q`, so values
//! are bit-stable regardless of how large `P` gets.

use num_complex::Complex64;
use thiserror::Error;

use crate::polynomial::{mul_mod, pow_mod, reduce_bigint, Polynomial};
use crate::stats::{linear_fit, LineFit};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumTheoryError {
    #[error("exhaustive budget exceeded: {0} residues (max {1})")]
    BudgetExceeded(u128, u128),
    #[error("decay fit needs at least 3 samples with positive values")]
    DegenerateFit,
}

/// A normalized complete sum value.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussSumValue {
    pub value: Complex64,
    pub q: u64,
    pub a: i64,
    pub t2: Option<i64>,
    pub magnitude: f64,
}

/// `e^{2 pi i k / q}` for `k` in `[0, q)`.
pub struct RootsOfUnity {
    table: Vec<Complex64>,
}

impl RootsOfUnity {
    pub fn new(q: u64) -> Self {
        let table = (0..q)
            .map(|k| {
                let (s, c) = (2.0 * std::f64::consts::PI * k as f64 / q as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        Self { table }
    }

    #[inline]
    pub fn get(&self, k: u64) -> Complex64 {
        self.table[k as usize]
    }
}

/// Polynomial with coefficients reduced mod `q`, grouped for fast repeated
/// evaluation along `t1` at a fixed `t2`.
struct ReducedPoly {
    /// `(m1, rows of (m2, c mod q))`, ascending in `m1`.
    rows: Vec<(u32, Vec<(u32, u64)>)>,
    q: u64,
}

impl ReducedPoly {
    fn new(p: &Polynomial, q: u64) -> Self {
        let rows = p
            .t1_coefficient_rows()
            .into_iter()
            .map(|(m1, row)| {
                (
                    m1,
                    row.into_iter()
                        .map(|(m2, c)| (m2, reduce_bigint(&c, q)))
                        .collect(),
                )
            })
            .collect();
        Self { rows, q }
    }

    /// Coefficients of `t1^{m1}` at this `t2`, densely up to the max degree.
    fn t1_coeffs_at(&self, t2: i64) -> Vec<u64> {
        let q = self.q;
        let t2r = t2.rem_euclid(q as i64) as u64;
        let deg = self.rows.last().map(|r| r.0).unwrap_or(0) as usize;
        let mut out = vec![0u64; deg + 1];
        for (m1, row) in &self.rows {
            let mut acc = 0u64;
            for &(m2, c) in row {
                acc = (acc + mul_mod(c, pow_mod(t2r, m2, q), q)) % q;
            }
            out[*m1 as usize] = acc;
        }
        out
    }
}

fn eval_dense_mod(coeffs: &[u64], t1: u64, q: u64) -> u64 {
    let mut acc = 0u64;
    for &c in coeffs.iter().rev() {
        acc = (mul_mod(acc, t1, q) + c) % q;
    }
    acc
}

/// `S^{t2}(a/q) = (1/q) sum_{t1=1..q} e^{2 pi i (a/q) P(t1, t2)}`.
pub fn gauss_fiber(p: &Polynomial, t2: i64, a: i64, q: u64) -> GaussSumValue {
    assert!(q >= 1, "q must be positive");
    let roots = RootsOfUnity::new(q);
    let reduced = ReducedPoly::new(p, q);
    let value = gauss_fiber_with(&reduced, &roots, t2, a, q);
    GaussSumValue {
        value,
        q,
        a,
        t2: Some(t2),
        magnitude: value.norm(),
    }
}

fn gauss_fiber_with(
    reduced: &ReducedPoly,
    roots: &RootsOfUnity,
    t2: i64,
    a: i64,
    q: u64,
) -> Complex64 {
    let ar = a.rem_euclid(q as i64) as u64;
    let coeffs = reduced.t1_coeffs_at(t2);
    let mut sum = Complex64::new(0.0, 0.0);
    for t1 in 1..=q {
        let r = mul_mod(ar, eval_dense_mod(&coeffs, t1 % q, q), q);
        sum += roots.get(r);
    }
    sum / q as f64
}

/// Average of `|S^{t2}(a/q)|` over the dyadic block `t2 in (2^{j2-1}, 2^{j2}]`
/// (`t2 = 1` alone for `j2 = 0`). Parallel over fixed-size chunks with an
/// order-independent merge.
pub fn gauss_fiber_average(p: &Polynomial, j2: u32, a: i64, q: u64) -> f64 {
    assert!(q >= 1);
    assert!(j2 < 40, "dyadic scale too large for fiber averaging");
    let roots = RootsOfUnity::new(q);
    let reduced = ReducedPoly::new(p, q);
    let (lo, hi) = if j2 == 0 {
        (1i64, 1i64)
    } else {
        (1i64 << (j2 - 1), 1i64 << j2)
    };
    let range: Vec<i64> = (lo + 1..=hi).collect();
    let range = if j2 == 0 { vec![1] } else { range };
    use rayon::prelude::*;
    let chunk = 512;
    let partials: Vec<f64> = range
        .par_chunks(chunk)
        .map(|ts| {
            let mut acc = 0.0;
            for &t2 in ts {
                acc += gauss_fiber_with(&reduced, &roots, t2, a, q).norm();
            }
            acc
        })
        .collect();
    let total: f64 = pairwise_sum(&partials);
    total / range.len() as f64
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// `S_w(a/q) = (1/q^2) sum_{l1,l2=1..q} e^{-2 pi i ((a/q) P(l) - (w.l)/q)}`.
pub fn gauss_full(p: &Polynomial, a: i64, q: u64, w: (i64, i64)) -> GaussSumValue {
    assert!(q >= 1);
    let roots = RootsOfUnity::new(q);
    let reduced = ReducedPoly::new(p, q);
    let ar = a.rem_euclid(q as i64) as u64;
    let w1 = w.0.rem_euclid(q as i64) as u64;
    let w2 = w.1.rem_euclid(q as i64) as u64;
    let mut sum = Complex64::new(0.0, 0.0);
    for l2 in 1..=q {
        let coeffs = reduced.t1_coeffs_at(l2 as i64);
        let tw2 = mul_mod(w2, l2 % q, q);
        for l1 in 1..=q {
            let phase = mul_mod(ar, eval_dense_mod(&coeffs, l1 % q, q), q);
            let lin = (tw2 + mul_mod(w1, l1 % q, q)) % q;
            // e^{-2 pi i (phase - lin)/q} = e^{2 pi i (lin - phase)/q}
            let r = (lin + q - phase) % q;
            sum += roots.get(r);
        }
    }
    let value = sum / (q as f64 * q as f64);
    GaussSumValue {
        value,
        q,
        a,
        t2: None,
        magnitude: value.norm(),
    }
}

/// Exhaustive count of `t in [1, p^alpha]` with `g(t) = 0 mod p^alpha`,
/// for a univariate `g` given as dense coefficients (constant first).
pub fn count_congruence_roots(
    g: &[num_bigint::BigInt],
    p: u64,
    alpha: u32,
) -> Result<u64, NumTheoryError> {
    const BUDGET: u128 = 1_000_000;
    let modulus = (p as u128).checked_pow(alpha).unwrap_or(u128::MAX);
    if modulus > BUDGET {
        return Err(NumTheoryError::BudgetExceeded(modulus, BUDGET));
    }
    let m = modulus as u64;
    let coeffs: Vec<u64> = g.iter().map(|c| reduce_bigint(c, m)).collect();
    let mut count = 0;
    for t in 1..=m {
        if eval_dense_mod(&coeffs, t % m, m) == 0 {
            count += 1;
        }
    }
    Ok(count)
}

/// Power-law fit `value ~ C q^{-delta}` by least squares on log-log pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub sample_range: (f64, f64),
}

pub fn fit_decay(samples: &[(f64, f64)]) -> Result<DecayFit, NumTheoryError> {
    if samples.len() < 3 || samples.iter().any(|&(q, v)| q <= 0.0 || v <= 0.0) {
        return Err(NumTheoryError::DegenerateFit);
    }
    let qmin = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let qmax = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if qmin == qmax {
        return Err(NumTheoryError::DegenerateFit);
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let LineFit {
        slope,
        intercept,
        r_squared,
    } = linear_fit(&xs, &ys);
    Ok(DecayFit {
        exponent: -slope,
        constant: intercept.exp(),
        r_squared,
        sample_range: (qmin, qmax),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn poly(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn fiber_two_term_example() {
        // P = t1^2, q = 2: phases at t1 = 1, 2 are 1/2 and 0 -> sum 0
        let g = gauss_fiber(&poly("t1^2"), 7, 1, 2);
        assert!(g.magnitude < 1e-15);
    }

    #[test]
    fn fiber_four_term_example() {
        // P = t1^2*t2 at t2 = 1, a = 1, q = 4 -> (1+i)/2
        let g = gauss_fiber(&poly("t1^2*t2"), 1, 1, 4);
        assert!((g.value - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        assert!((g.magnitude - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fiber_periodic_in_a() {
        let p = poly("t1^3*t2 + t1");
        let a = gauss_fiber(&p, 5, 2, 7);
        let b = gauss_fiber(&p, 5, 2 + 7, 7);
        let c = gauss_fiber(&p, 5, 2 - 7, 7);
        assert!((a.value - b.value).norm() < 1e-15);
        assert!((a.value - c.value).norm() < 1e-15);
    }

    #[test]
    fn fiber_conjugation_in_a() {
        let p = poly("t1^3*t2 + t1");
        let a = gauss_fiber(&p, 9, 3, 11);
        let b = gauss_fiber(&p, 9, -3, 11);
        assert!((a.value.conj() - b.value).norm() < 1e-12);
    }

    #[test]
    fn fiber_magnitude_bounded() {
        for (s, t2, a, q) in [
            ("t1^2*t2", 33, 1, 9),
            ("t1^4 + t2", -5, 3, 16),
            ("5*t1^3*t2^2", 12, 7, 25),
        ] {
            let g = gauss_fiber(&poly(s), t2, a, q);
            assert!(g.magnitude <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn average_q1_is_one() {
        assert!((gauss_fiber_average(&poly("t1^2*t2"), 6, 0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn average_matches_direct_mean() {
        let p = poly("t1^2*t2");
        let avg = gauss_fiber_average(&p, 6, 1, 4);
        let mut direct = 0.0;
        for t2 in 33..=64 {
            direct += gauss_fiber(&p, t2, 1, 4).magnitude;
        }
        direct /= 32.0;
        assert!((avg - direct).abs() < 1e-12);
        assert!(avg < 1.0);
    }

    #[test]
    fn full_sum_q1_is_one() {
        let g = gauss_full(&poly("t1*t2"), 0, 1, (0, 0));
        assert!((g.value - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn full_sum_hand_enumeration() {
        // P = t1*t2, q = 2, a = 1, w = 0: values P mod 2 over {1,2}^2 are
        // 1,0,0,0 -> (e^{-pi i} + 3)/4 = 1/2
        let g = gauss_full(&poly("t1*t2"), 1, 2, (0, 0));
        assert!((g.value - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn full_sum_periodic_in_w() {
        let p = poly("t1^2*t2 + t2^2");
        let a = gauss_full(&p, 2, 5, (1, 3));
        let b = gauss_full(&p, 2, 5, (1 + 5, 3));
        let c = gauss_full(&p, 2, 5, (1, 3 - 5));
        assert!((a.value - b.value).norm() < 1e-14);
        assert!((a.value - c.value).norm() < 1e-14);
    }

    #[test]
    fn congruence_counts() {
        // g = t, p = 5, alpha = 2: only t = 25
        let g = vec![BigInt::from(0), BigInt::from(1)];
        assert_eq!(count_congruence_roots(&g, 5, 2).unwrap(), 1);
        // g = t^2, p = 3, alpha = 2: t in {3, 6, 9}
        let g = vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)];
        assert_eq!(count_congruence_roots(&g, 3, 2).unwrap(), 3);
        // g = t^2 - 1, p = 2, alpha = 3: t in {1, 3, 5, 7}
        let g = vec![BigInt::from(-1), BigInt::from(0), BigInt::from(1)];
        assert_eq!(count_congruence_roots(&g, 2, 3).unwrap(), 4);
    }

    #[test]
    fn congruence_budget() {
        let g = vec![BigInt::from(1), BigInt::from(1)];
        assert!(matches!(
            count_congruence_roots(&g, 101, 4),
            Err(NumTheoryError::BudgetExceeded(..))
        ));
    }

    #[test]
    fn decay_fit_exact_power_law() {
        let samples: Vec<(f64, f64)> = (2..40)
            .map(|q| (q as f64, (q as f64).powf(-0.5)))
            .collect();
        let fit = fit_decay(&samples).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.constant - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_constant_samples() {
        let samples: Vec<(f64, f64)> = (1..10).map(|q| (q as f64, 3.0)).collect();
        let fit = fit_decay(&samples).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn decay_fit_degenerate() {
        assert!(fit_decay(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_decay(&[(2.0, 1.0), (2.0, 0.5), (2.0, 0.25)]).is_err());
    }
}
