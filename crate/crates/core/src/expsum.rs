//! High-accuracy evaluation of the discrete exponential sums: the truncated
//! transform over `R(N1, N2)`, dyadic block pieces, plain Weyl sums over
//! boxes, sharp-window weighted blocks, and the running-sup scan.
//!
//! Phases are reduced mod 1 exactly: `P(t)` is evaluated by wrapping `u128`
//! Horner (a ring homomorphism onto `Z/2^128`), multiplied by the 128
//! fraction bits of each frequency, and only then converted to a double.
//! A rational part `a/q` of the surface frequency is carried separately in
//! integer arithmetic mod `q`, so exact-rational phases stay exact.
//!
//! Summation is compensated (Neumaier) per fixed-size chunk of `t2` rows,
//! merged by a fixed-shape pairwise tree, so results are bit-identical
//! across worker counts.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use thiserror::Error;

use crate::fixed::{frac_to_f64, FixedReal};
use crate::polynomial::Polynomial;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExpsumError {
    #[error("lattice budget exceeded: {0} points (max {1})")]
    LatticeBudget(u128, u128),
    #[error("denominator {0} too large for residue tables")]
    DenominatorBudget(u64),
    #[error("direct weighted block at scale j1={0} too large; needs the rational fast path")]
    BlockScale(u64),
}

/// Which sign quadrants of the lattice to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrants {
    /// All four `(±t1, ±t2)`.
    Full,
    /// `t1, t2 >= 1` only.
    PositivePositive,
}

/// Frequency triple with the surface frequency split as `xi3 = a/q + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseContext {
    pub xi1: FixedReal,
    pub xi2: FixedReal,
    pub xi3_num: i64,
    pub xi3_den: u64,
    pub xi3_beta: FixedReal,
}

impl PhaseContext {
    pub fn zero() -> Self {
        Self::from_fixed(FixedReal::ZERO, FixedReal::ZERO, FixedReal::ZERO)
    }

    pub fn from_fixed(xi1: FixedReal, xi2: FixedReal, xi3: FixedReal) -> Self {
        Self {
            xi1,
            xi2,
            xi3_num: 0,
            xi3_den: 1,
            xi3_beta: xi3,
        }
    }

    /// Exact rational surface frequency `a/q` (beta = 0).
    pub fn with_rational_xi3(xi1: FixedReal, xi2: FixedReal, a: i64, q: u64) -> Self {
        assert!(q >= 1);
        Self {
            xi1,
            xi2,
            xi3_num: a,
            xi3_den: q,
            xi3_beta: FixedReal::ZERO,
        }
    }

    pub fn with_split_xi3(xi1: FixedReal, xi2: FixedReal, a: i64, q: u64, beta: FixedReal) -> Self {
        assert!(q >= 1);
        Self {
            xi1,
            xi2,
            xi3_num: a,
            xi3_den: q,
            xi3_beta: beta,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            xi1: self.xi1.neg(),
            xi2: self.xi2.neg(),
            xi3_num: -self.xi3_num,
            xi3_den: self.xi3_den,
            xi3_beta: self.xi3_beta.neg(),
        }
    }

    pub fn xi3_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.xi3_num), BigInt::from(self.xi3_den))
            + self.xi3_beta.to_rational()
    }

    pub fn is_zero(&self) -> bool {
        self.xi1.is_zero()
            && self.xi2.is_zero()
            && self.xi3_beta.is_zero()
            && (self.xi3_num.rem_euclid(self.xi3_den as i64) == 0)
    }
}

/// Value of a finite exponential sum with an accumulated rounding bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumResult {
    pub value: Complex64,
    pub abs_error_bound: f64,
    pub terms: u64,
}

impl SumResult {
    pub fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            abs_error_bound: 0.0,
            terms: 0,
        }
    }

    pub fn combine(&self, other: &SumResult) -> SumResult {
        SumResult {
            value: self.value + other.value,
            abs_error_bound: self.abs_error_bound + other.abs_error_bound,
            terms: self.terms + other.terms,
        }
    }
}

// per-term phase+sincos rounding plus compensated accumulation
const TERM_EPS: f64 = 1.2e-15;

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    re: Neumaier,
    im: Neumaier,
    abs: f64,
    terms: u64,
}

impl Partial {
    fn merge(&mut self, other: &Partial) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
        self.abs += other.abs;
        self.terms += other.terms;
    }

    fn into_result(self) -> SumResult {
        SumResult {
            value: Complex64::new(self.re.value(), self.im.value()),
            abs_error_bound: self.abs * TERM_EPS,
            terms: self.terms,
        }
    }
}

/// Fixed-shape pairwise merge; the tree depends only on the chunk count.
fn merge_tree(parts: &[Partial]) -> Partial {
    match parts.len() {
        0 => Partial::default(),
        1 => parts[0],
        n => {
            let mut left = merge_tree(&parts[..n / 2]);
            let right = merge_tree(&parts[n / 2..]);
            left.merge(&right);
            left
        }
    }
}

/// Wrapped (mod 2^128) and mod-q coefficient rows of `P` as a polynomial in
/// `t1` whose coefficients are polynomials in `t2`.
struct PreparedPoly {
    /// ascending m1: (m1, [(m2, c mod 2^128 two's complement)])
    wrap_rows: Vec<(u32, Vec<(u32, u128)>)>,
    /// same layout mod q (empty when q == 1)
    mod_rows: Vec<(u32, Vec<(u32, u64)>)>,
    deg1: usize,
    q: u64,
}

impl PreparedPoly {
    fn new(p: &Polynomial, q: u64) -> Self {
        let two128 = BigInt::from(1u8) << 128u32;
        let wrap_rows: Vec<(u32, Vec<(u32, u128)>)> = p
            .t1_coefficient_rows()
            .into_iter()
            .map(|(m1, row)| {
                (
                    m1,
                    row.into_iter()
                        .map(|(m2, c)| (m2, c.mod_floor(&two128).to_u128().unwrap()))
                        .collect(),
                )
            })
            .collect();
        let mod_rows = if q > 1 {
            p.t1_coefficient_rows()
                .into_iter()
                .map(|(m1, row)| {
                    (
                        m1,
                        row.into_iter()
                            .map(|(m2, c)| (m2, crate::polynomial::reduce_bigint(&c, q)))
                            .collect(),
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        let deg1 = wrap_rows.last().map(|r| r.0).unwrap_or(0) as usize;
        Self {
            wrap_rows,
            mod_rows,
            deg1,
            q,
        }
    }

    /// Dense wrapped t1-coefficients at `t2`, with `t1 -> s1 * t1` folded in.
    fn wrap_coeffs(&self, t2: i64, s1: i64) -> Vec<u128> {
        let t2w = t2 as i128 as u128;
        let mut out = vec![0u128; self.deg1 + 1];
        for (m1, row) in &self.wrap_rows {
            let mut acc = 0u128;
            for &(m2, c) in row {
                acc = acc.wrapping_add(c.wrapping_mul(wrap_pow(t2w, m2)));
            }
            if s1 < 0 && m1 % 2 == 1 {
                acc = acc.wrapping_neg();
            }
            out[*m1 as usize] = acc;
        }
        out
    }

    /// Residue table `a * P(s1*l, t2) mod q` for `l` in `0..q`.
    fn residue_table(&self, t2: i64, s1: i64, a_red: u64) -> Vec<u64> {
        use crate::polynomial::{mul_mod, pow_mod};
        let q = self.q;
        let t2r = t2.rem_euclid(q as i64) as u64;
        let deg = self.deg1;
        let mut dense = vec![0u64; deg + 1];
        for (m1, row) in &self.mod_rows {
            let mut acc = 0u64;
            for &(m2, c) in row {
                acc = (acc + mul_mod(c, pow_mod(t2r, m2, q), q)) % q;
            }
            if s1 < 0 && m1 % 2 == 1 && acc != 0 {
                acc = q - acc;
            }
            dense[*m1 as usize] = acc;
        }
        (0..q)
            .map(|l| {
                let mut acc = 0u64;
                for &c in dense.iter().rev() {
                    acc = (mul_mod(acc, l, q) + c) % q;
                }
                mul_mod(a_red, acc, q)
            })
            .collect()
    }
}

fn wrap_pow(mut b: u128, mut e: u32) -> u128 {
    let mut acc = 1u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.wrapping_mul(b);
        }
        b = b.wrapping_mul(b);
        e >>= 1;
    }
    acc
}

#[inline]
fn wrap_eval(coeffs: &[u128], t1w: u128) -> u128 {
    let mut acc = 0u128;
    for &c in coeffs.iter().rev() {
        acc = acc.wrapping_mul(t1w).wrapping_add(c);
    }
    acc
}

/// Discrete weights of the sharp dyadic window: 1 strictly inside the block,
/// 1/2 at the dyadic endpoints, 0 outside. Window 0 holds only `t = 1` with
/// weight 1/2.
pub fn sharp_window_weight(ell: u64, t: u64) -> f64 {
    if ell == 0 {
        return if t == 1 { 0.5 } else { 0.0 };
    }
    let lo = 1u64 << (ell - 1);
    let hi = 1u64 << ell;
    if t == lo || t == hi {
        0.5
    } else if t > lo && t < hi {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
struct SumSpec {
    t1_lo: u64,
    t1_hi: u64,
    t2_lo: u64,
    t2_hi: u64,
    quadrants: Quadrants,
    /// kernel 1/(t1 t2) when set, unit weights otherwise
    reciprocal: bool,
    /// e^{-2 pi i theta} when true (transform convention), e^{+...} otherwise
    negate_phase: bool,
    /// sharp-window exponents (j1, j2) to weight with, if any
    chi: Option<(u64, u64)>,
}

const LATTICE_BUDGET: u128 = 1 << 49;
const DENOMINATOR_BUDGET: u64 = 1 << 20;
const CHUNK_ROWS: u64 = 256;

fn engine(p: &Polynomial, ctx: &PhaseContext, spec: &SumSpec) -> Result<SumResult, ExpsumError> {
    if spec.t1_hi < spec.t1_lo || spec.t2_hi < spec.t2_lo {
        return Ok(SumResult::zero());
    }
    let points =
        (spec.t1_hi - spec.t1_lo + 1) as u128 * (spec.t2_hi - spec.t2_lo + 1) as u128;
    if points > LATTICE_BUDGET {
        return Err(ExpsumError::LatticeBudget(points, LATTICE_BUDGET));
    }
    if ctx.xi3_den > DENOMINATOR_BUDGET {
        return Err(ExpsumError::DenominatorBudget(ctx.xi3_den));
    }
    let prepared = PreparedPoly::new(p, ctx.xi3_den);
    let a_red = ctx.xi3_num.rem_euclid(ctx.xi3_den as i64) as u64;
    let f1 = ctx.xi1.frac_bits();
    let f2 = ctx.xi2.frac_bits();
    let f3 = ctx.xi3_beta.frac_bits();
    let q = ctx.xi3_den;
    let inv_q = 1.0 / q as f64;
    let sign = if spec.negate_phase { -1.0 } else { 1.0 };

    let nrows = spec.t2_hi - spec.t2_lo + 1;
    let nchunks = nrows.div_ceil(CHUNK_ROWS);
    let signs1: &[i64] = match spec.quadrants {
        Quadrants::Full => &[1, -1],
        Quadrants::PositivePositive => &[1],
    };
    let signs2 = signs1;

    let partials: Vec<Partial> = (0..nchunks)
        .into_par_iter()
        .map(|ci| {
            let lo = spec.t2_lo + ci * CHUNK_ROWS;
            let hi = (lo + CHUNK_ROWS - 1).min(spec.t2_hi);
            let mut part = Partial::default();
            let mut combos: Vec<(f64, bool, Vec<u128>, Vec<u64>, u128)> = Vec::new();
            for u2 in lo..=hi {
                let w2_weight = match spec.chi {
                    Some((_, j2)) => sharp_window_weight(j2, u2),
                    None => 1.0,
                };
                if w2_weight == 0.0 {
                    continue;
                }
                combos.clear();
                // push order gives kernel signs +,-,-,+ per lattice point, so
                // a zero-frequency sum cancels exactly inside the accumulator
                for &s2 in signs2 {
                    let t2 = s2 * u2 as i64;
                    let lin2 = f2.wrapping_mul(t2 as i128 as u128);
                    for &s1 in signs1 {
                        let ks = (s1 * s2) as f64;
                        let coeffs = prepared.wrap_coeffs(t2, s1);
                        let table = if q > 1 {
                            prepared.residue_table(t2, s1, a_red)
                        } else {
                            Vec::new()
                        };
                        combos.push((ks, s1 < 0, coeffs, table, lin2));
                    }
                }
                let inv_u2 = 1.0 / u2 as f64;
                for t1 in spec.t1_lo..=spec.t1_hi {
                    let w1_weight = match spec.chi {
                        Some((j1, _)) => sharp_window_weight(j1, t1),
                        None => 1.0,
                    };
                    if w1_weight == 0.0 {
                        continue;
                    }
                    let kernel_mag = if spec.reciprocal {
                        w1_weight * w2_weight / t1 as f64 * inv_u2
                    } else {
                        w1_weight * w2_weight
                    };
                    let t1w = t1 as u128;
                    let lin1 = f1.wrapping_mul(t1w);
                    for (ks, t1_negated, coeffs, table, lin2) in &combos {
                        let pw = wrap_eval(coeffs, t1w);
                        let lin1_signed = if *t1_negated { lin1.wrapping_neg() } else { lin1 };
                        let wrapped = lin1_signed
                            .wrapping_add(*lin2)
                            .wrapping_add(f3.wrapping_mul(pw));
                        let mut frac = frac_to_f64(wrapped);
                        if q > 1 {
                            frac += table[(t1 % q) as usize] as f64 * inv_q;
                            if frac >= 1.0 {
                                frac -= 1.0;
                            }
                        }
                        let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
                        let k = kernel_mag * ks;
                        part.re.add(k * c);
                        part.im.add(k * sign * s);
                        part.abs += kernel_mag.abs();
                        part.terms += 1;
                    }
                }
            }
            part
        })
        .collect();
    Ok(merge_tree(&partials).into_result())
}

/// The truncated transform: sum over `1 <= |t1| <= N1`, `1 <= |t2| <= N2`
/// of `e^{-2 pi i (xi1 t1 + xi2 t2 + xi3 P(t))} / (t1 t2)`.
pub fn hilbert_sum(
    p: &Polynomial,
    n1: u64,
    n2: u64,
    ctx: &PhaseContext,
    quadrants: Quadrants,
) -> Result<SumResult, ExpsumError> {
    assert!(n1 >= 1 && n2 >= 1);
    engine(
        p,
        ctx,
        &SumSpec {
            t1_lo: 1,
            t1_hi: n1,
            t2_lo: 1,
            t2_hi: n2,
            quadrants,
            reciprocal: true,
            negate_phase: true,
            chi: None,
        },
    )
}

/// Dyadic block bounds: block 0 is `{1}`, block `j >= 1` is `(2^{j-1}, 2^j]`.
pub fn dyadic_block(j: u64) -> (u64, u64) {
    if j == 0 {
        (1, 1)
    } else {
        ((1 << (j - 1)) + 1, 1 << j)
    }
}

/// One dyadic piece of the transform: the same kernel and phase restricted
/// to `t1` in block `j1`, `t2` in block `j2`.
pub fn dyadic_piece(
    p: &Polynomial,
    j: (u64, u64),
    ctx: &PhaseContext,
    quadrants: Quadrants,
) -> Result<SumResult, ExpsumError> {
    let (l1, h1) = dyadic_block(j.0);
    let (l2, h2) = dyadic_block(j.1);
    engine(
        p,
        ctx,
        &SumSpec {
            t1_lo: l1,
            t1_hi: h1,
            t2_lo: l2,
            t2_hi: h2,
            quadrants,
            reciprocal: true,
            negate_phase: true,
            chi: None,
        },
    )
}

/// Unweighted character sum `sum e^{+2 pi i (xi1 t1 + xi2 t2 + xi3 P(t))}`
/// over a box of positive integers.
pub fn weyl_sum(
    p: &Polynomial,
    t1_range: (u64, u64),
    t2_range: (u64, u64),
    ctx: &PhaseContext,
) -> Result<SumResult, ExpsumError> {
    engine(
        p,
        ctx,
        &SumSpec {
            t1_lo: t1_range.0,
            t1_hi: t1_range.1,
            t2_lo: t2_range.0,
            t2_hi: t2_range.1,
            quadrants: Quadrants::PositivePositive,
            reciprocal: false,
            negate_phase: false,
            chi: None,
        },
    )
}

/// Sharp-window weighted block `sum e^{-2 pi i xi . (t, P(t))}
/// chi_{j1}(t1) chi_{j2}(t2) / (t1 t2)`.
///
/// With a purely rational surface frequency and no linear frequencies the
/// inner `t1`-sum collapses onto residue classes and is evaluated by
/// harmonic-progression sums, so scales like `j1 = 35` cost microseconds.
pub fn chi_block(
    p: &Polynomial,
    j: (u64, u64),
    ctx: &PhaseContext,
    quadrants: Quadrants,
) -> Result<SumResult, ExpsumError> {
    let rational_path = ctx.xi3_beta.is_zero()
        && ctx.xi1.is_zero()
        && ctx.xi2.is_zero()
        && ctx.xi3_den <= DENOMINATOR_BUDGET
        && j.0 >= 12;
    if rational_path {
        return Ok(chi_block_rational(p, j, ctx.xi3_num, ctx.xi3_den, quadrants));
    }
    if j.0 > 26 {
        return Err(ExpsumError::BlockScale(j.0));
    }
    let (l1, h1) = chi_support(j.0);
    let (l2, h2) = chi_support(j.1);
    engine(
        p,
        ctx,
        &SumSpec {
            t1_lo: l1,
            t1_hi: h1,
            t2_lo: l2,
            t2_hi: h2,
            quadrants,
            reciprocal: true,
            negate_phase: true,
            chi: Some(j),
        },
    )
}

/// Integer support of the sharp window `chi_j`: `[2^{j-1}, 2^j]` (just
/// `{1}` for window 0).
fn chi_support(j: u64) -> (u64, u64) {
    if j == 0 {
        (1, 1)
    } else {
        (1 << (j - 1), 1 << j)
    }
}

/// Exact-rational fast path: groups `t1` by residue class mod `q` and sums
/// the reciprocal weights by harmonic-progression differences.
fn chi_block_rational(
    p: &Polynomial,
    j: (u64, u64),
    a: i64,
    q: u64,
    quadrants: Quadrants,
) -> SumResult {
    let prepared = PreparedPoly::new(p, q.max(2)); // q=1 still needs residue 0
    let a_red = a.rem_euclid(q as i64) as u64;
    let qq = q.max(2);
    let (l1, h1) = chi_support(j.0);
    let (l2, h2) = chi_support(j.1);
    let signs: &[i64] = match quadrants {
        Quadrants::Full => &[1, -1],
        Quadrants::PositivePositive => &[1],
    };
    // reciprocal chi-weighted sums per residue class mod q of |t1|
    let mut class_weight = vec![0f64; q as usize];
    for (l, w) in class_weight.iter_mut().enumerate() {
        *w = chi_progression_sum(j.0, l as u64, q, l1, h1);
    }
    let roots = crate::numtheory::RootsOfUnity::new(qq);
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    let mut abs = 0.0;
    let mut terms = 0u64;
    for u2 in l2..=h2 {
        let w2 = sharp_window_weight(j.1, u2);
        if w2 == 0.0 {
            continue;
        }
        for &s2 in signs {
            let t2 = s2 * u2 as i64;
            for &s1 in signs {
                // residues a * P(s1 * l, t2) mod q for l in 0..q
                let table = prepared.residue_table(t2, s1, if q == 1 { 0 } else { a_red });
                let ks = (s1 * s2) as f64 * w2 / u2 as f64;
                let mut inner = Complex64::new(0.0, 0.0);
                for l in 0..q as usize {
                    let w = class_weight[l];
                    if w == 0.0 {
                        continue;
                    }
                    // e^{-2 pi i r / q}
                    let r = if q == 1 { 0 } else { table[l] };
                    let root = roots.get((qq - r) % qq);
                    inner += root * w;
                    terms += 1;
                }
                re.add(ks * inner.re);
                im.add(ks * inner.im);
                abs += ks.abs() * class_weight.iter().sum::<f64>();
            }
        }
    }
    SumResult {
        value: Complex64::new(re.value(), im.value()),
        abs_error_bound: abs * TERM_EPS * 4.0,
        terms,
    }
}

/// `sum chi_j(t) / t` over `t > 0` with `t = l mod q`, computed by digamma
/// differences above the direct threshold.
fn chi_progression_sum(j: u64, l: u64, q: u64, lo: u64, hi: u64) -> f64 {
    let l = l % q;
    let mut total = 0.0;
    // half-weight endpoints
    for endpoint in [lo, hi] {
        if sharp_window_weight(j, endpoint) == 0.5 && endpoint % q == l {
            total += 0.5 / endpoint as f64;
        }
    }
    if hi < lo + 2 {
        return total;
    }
    // interior (lo, hi) exclusive: t = q k + l
    let (a, b) = (lo + 1, hi - 1);
    let first = a + (l + q - a % q) % q; // smallest t >= a with t = l mod q
    if first > b {
        return total;
    }
    let count = (b - first) / q + 1;
    if count <= 4096 {
        let mut t = first;
        for _ in 0..count {
            total += 1.0 / t as f64;
            t += q;
        }
    } else {
        let k0 = (first - l) / q;
        let k1 = k0 + count - 1;
        let off = l as f64 / q as f64;
        total += psi_diff(k0 as f64 + off, (k1 + 1) as f64 + off) / q as f64;
    }
    total
}

/// `psi(hi) - psi(lo)` to near machine accuracy for positive arguments.
fn psi_diff(mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi >= lo);
    let mut acc = 0.0;
    while lo < 32.0 {
        acc += 1.0 / lo;
        lo += 1.0;
    }
    while hi < 32.0 {
        acc -= 1.0 / hi;
        hi += 1.0;
    }
    acc + (hi / lo).ln() - 0.5 / hi + 0.5 / lo - psi_tail(hi) + psi_tail(lo)
}

fn psi_tail(x: f64) -> f64 {
    let w = 1.0 / (x * x);
    w * (1.0 / 12.0
        + w * (-1.0 / 120.0 + w * (1.0 / 252.0 + w * (-1.0 / 240.0 + w * (1.0 / 132.0)))))
}

/// Squared-modulus identity for the second-variable difference operator:
/// `|sum_{t2 in [a,b]} e^{2 pi i xi3 P(t1,t2)}|^2` equals
/// `sum_r sum_{t2} e^{2 pi i xi3 (P(t1,t2+r) - P(t1,t2))}` with the inner
/// range `[a-r, b-r] ∩ [a, b]`. Returns `|lhs - rhs|`; the right side is
/// evaluated through symbolically differenced polynomials.
pub fn differencing_identity_check(
    p: &Polynomial,
    xi3: FixedReal,
    t1: i64,
    range: (i64, i64),
) -> f64 {
    let (a, b) = range;
    assert!(b >= a && b - a <= 64, "identity check is desk-scale");
    let f3 = xi3.frac_bits();
    let prepared = PreparedPoly::new(p, 1);
    let mut lhs = Complex64::new(0.0, 0.0);
    for t2 in a..=b {
        lhs += phase_at_point(&prepared, f3, t1, t2);
    }
    let lhs_sq = lhs.norm_sqr();
    let mut rhs = Complex64::new(0.0, 0.0);
    for r in (a - b)..=(b - a) {
        let diff = p.difference_t2(r);
        let dprep = PreparedPoly::new(&diff, 1);
        let lo = a.max(a - r);
        let hi = b.min(b - r);
        for t2 in lo..=hi {
            rhs += phase_at_point(&dprep, f3, t1, t2);
        }
    }
    (Complex64::new(lhs_sq, 0.0) - rhs).norm()
}

fn phase_at_point(prepared: &PreparedPoly, f3: u128, t1: i64, t2: i64) -> Complex64 {
    let s1 = if t1 < 0 { -1 } else { 1 };
    let coeffs = prepared.wrap_coeffs(t2, s1);
    let pw = wrap_eval(&coeffs, t1.unsigned_abs() as u128);
    let frac = frac_to_f64(f3.wrapping_mul(pw));
    let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
    Complex64::new(c, s)
}

/// Sup over all prefix boxes `[lo1,T1] x [lo2,T2]` of the unweighted
/// character sum `|sum e^{+2 pi i xi.(t, P(t))}|`, the quantity summation by
/// parts transfers onto the reciprocal kernel.
pub fn weyl_partial_sup(
    p: &Polynomial,
    t1_range: (u64, u64),
    t2_range: (u64, u64),
    ctx: &PhaseContext,
) -> Result<f64, ExpsumError> {
    let (l1, h1) = t1_range;
    let (l2, h2) = t2_range;
    if h1 < l1 || h2 < l2 {
        return Ok(0.0);
    }
    let width = (h1 - l1 + 1) as usize;
    if width > (1 << 22) {
        return Err(ExpsumError::LatticeBudget(width as u128, 1 << 22));
    }
    let points = width as u128 * (h2 - l2 + 1) as u128;
    if points > LATTICE_BUDGET {
        return Err(ExpsumError::LatticeBudget(points, LATTICE_BUDGET));
    }
    if ctx.xi3_den > DENOMINATOR_BUDGET {
        return Err(ExpsumError::DenominatorBudget(ctx.xi3_den));
    }
    let prepared = PreparedPoly::new(p, ctx.xi3_den);
    let a_red = ctx.xi3_num.rem_euclid(ctx.xi3_den as i64) as u64;
    let f1 = ctx.xi1.frac_bits();
    let f2 = ctx.xi2.frac_bits();
    let f3 = ctx.xi3_beta.frac_bits();
    let q = ctx.xi3_den;
    let inv_q = 1.0 / q as f64;
    // column-cumulative sums over t2; prefix over t1 after each row
    let mut cols = vec![Complex64::new(0.0, 0.0); width];
    let mut sup = 0f64;
    for t2 in l2..=h2 {
        let coeffs = prepared.wrap_coeffs(t2 as i64, 1);
        let table = if q > 1 {
            prepared.residue_table(t2 as i64, 1, a_red)
        } else {
            Vec::new()
        };
        let lin2 = f2.wrapping_mul(t2 as u128);
        for (idx, t1) in (l1..=h1).enumerate() {
            let t1w = t1 as u128;
            let pw = wrap_eval(&coeffs, t1w);
            let wrapped = f1
                .wrapping_mul(t1w)
                .wrapping_add(lin2)
                .wrapping_add(f3.wrapping_mul(pw));
            let mut frac = frac_to_f64(wrapped);
            if q > 1 {
                frac += table[(t1 % q) as usize] as f64 * inv_q;
                if frac >= 1.0 {
                    frac -= 1.0;
                }
            }
            let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
            cols[idx] += Complex64::new(c, s);
        }
        let mut prefix = Complex64::new(0.0, 0.0);
        for col in &cols {
            prefix += col;
            let norm = prefix.norm();
            if norm > sup {
                sup = norm;
            }
        }
    }
    Ok(sup)
}

/// One row of the running-sup table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupRow {
    pub n: u64,
    pub sup_abs: f64,
}

/// For each `N` in the schedule, the running max over the frequency grid of
/// `|H_{(N,N)}(xi)|`. Sums are extended incrementally by boundary shells, so
/// the whole schedule costs what the largest `N` costs.
pub fn partial_sup_scan(
    p: &Polynomial,
    grid: &[PhaseContext],
    schedule: &[u64],
    quadrants: Quadrants,
) -> Result<Vec<SupRow>, ExpsumError> {
    assert!(!schedule.is_empty());
    assert!(schedule.windows(2).all(|w| w[0] < w[1]), "schedule must increase");
    let trajectories: Result<Vec<Vec<f64>>, ExpsumError> = grid
        .par_iter()
        .map(|ctx| {
            let mut out = Vec::with_capacity(schedule.len());
            let mut acc = SumResult::zero();
            let mut prev_n = 0u64;
            for &n in schedule {
                let spec_base = SumSpec {
                    t1_lo: 1,
                    t1_hi: n,
                    t2_lo: prev_n + 1,
                    t2_hi: n,
                    quadrants,
                    reciprocal: true,
                    negate_phase: true,
                    chi: None,
                };
                // right shell: new t1 columns over old t2 rows
                if prev_n >= 1 {
                    let right = engine(
                        p,
                        ctx,
                        &SumSpec {
                            t1_lo: prev_n + 1,
                            t1_hi: n,
                            t2_lo: 1,
                            t2_hi: prev_n,
                            ..spec_base
                        },
                    )?;
                    acc = acc.combine(&right);
                }
                // top shell: all t1 columns over new t2 rows
                let top = engine(p, ctx, &spec_base)?;
                acc = acc.combine(&top);
                prev_n = n;
                out.push(acc.value.norm());
            }
            Ok(out)
        })
        .collect();
    let trajectories = trajectories?;
    let mut rows = Vec::with_capacity(schedule.len());
    let mut running = 0f64;
    for (k, &n) in schedule.iter().enumerate() {
        let grid_max = trajectories
            .iter()
            .map(|t| t[k])
            .fold(0f64, f64::max);
        running = running.max(grid_max);
        rows.push(SupRow { n, sup_abs: running });
    }
    Ok(rows)
}
