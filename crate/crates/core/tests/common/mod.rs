//! Shared oracles for the integration suites: a naive exact-phase summer
//! independent of the production engine, a brute-force hull extremality
//! test, and seeded random generators.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;

use dhilbert::expsum::{PhaseContext, Quadrants};
use dhilbert::polynomial::Polynomial;

/// Naive reference summer: phases are reduced mod 1 in exact rational
/// arithmetic, terms are accumulated in plain order with no compensation.
/// Slow, but shares no code with the production engine's wrapping path.
pub fn naive_hilbert_sum(
    p: &Polynomial,
    n1: u64,
    n2: u64,
    ctx: &PhaseContext,
    quadrants: Quadrants,
) -> Complex64 {
    let xi1 = ctx.xi1.to_rational();
    let xi2 = ctx.xi2.to_rational();
    let xi3 = ctx.xi3_rational();
    let signs: &[i64] = match quadrants {
        Quadrants::Full => &[1, -1],
        Quadrants::PositivePositive => &[1],
    };
    let mut total = Complex64::new(0.0, 0.0);
    for &s2 in signs {
        for t2 in 1..=n2 as i64 {
            for &s1 in signs {
                for t1 in 1..=n1 as i64 {
                    let (u1, u2) = (s1 * t1, s2 * t2);
                    let pv = p.eval_exact((u1, u2));
                    let phase = &xi1 * BigRational::from_integer(BigInt::from(u1))
                        + &xi2 * BigRational::from_integer(BigInt::from(u2))
                        + &xi3 * BigRational::from_integer(pv);
                    let frac = rational_frac(&phase);
                    let angle = -std::f64::consts::TAU * frac;
                    let kernel = 1.0 / (u1 as f64 * u2 as f64);
                    total += Complex64::new(angle.cos(), angle.sin()) * kernel;
                }
            }
        }
    }
    total
}

/// Fractional part of an exact rational, as a double in `[0, 1)`.
pub fn rational_frac(x: &BigRational) -> f64 {
    let fl = x.floor();
    (x - fl).to_f64().unwrap()
}

/// Brute-force extreme-point test: a support point is a vertex of
/// `Ch(support + (-R+^2))` iff it is not dominated componentwise by another
/// point and not weakly below any segment between two other points.
pub fn brute_force_vertices(support: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut vertices = Vec::new();
    'outer: for &v in support {
        for &u in support {
            if u != v && u.0 >= v.0 && u.1 >= v.1 {
                continue 'outer; // dominated
            }
        }
        for &a in support {
            for &b in support {
                if a == v || b == v || a == b {
                    continue;
                }
                if below_segment(v, a, b) {
                    continue 'outer;
                }
            }
        }
        vertices.push(v);
    }
    vertices.sort();
    vertices
}

/// Is `v` dominated by some convex combination of `a` and `b`? Exact
/// rational feasibility of `lambda a + (1-lambda) b >= v` on `[0,1]`.
fn below_segment(v: (u32, u32), a: (u32, u32), b: (u32, u32)) -> bool {
    // lambda (a - b) >= v - b componentwise
    let (d1, d2) = (a.0 as i64 - b.0 as i64, a.1 as i64 - b.1 as i64);
    let (r1, r2) = (v.0 as i64 - b.0 as i64, v.1 as i64 - b.1 as i64);
    // interval [lo, hi] of feasible lambda in [0,1], as exact fractions
    let mut lo = (0i64, 1i64); // lo = 0/1
    let mut hi = (1i64, 1i64);
    for (d, r) in [(d1, r1), (d2, r2)] {
        if d == 0 {
            if r > 0 {
                return false;
            }
        } else if d > 0 {
            // lambda >= r/d
            if frac_cmp(lo, (r, d)) < 0 {
                lo = (r, d);
            }
        } else {
            // lambda <= r/d (dividing by negative flips)
            if frac_cmp(hi, (r, d)) > 0 {
                hi = (r, d);
            }
        }
    }
    frac_cmp(lo, hi) <= 0
}

fn frac_cmp(a: (i64, i64), b: (i64, i64)) -> i32 {
    // compare a.0/a.1 with b.0/b.1, denominators positive after normalizing
    let (an, ad) = if a.1 < 0 { (-a.0, -a.1) } else { a };
    let (bn, bd) = if b.1 < 0 { (-b.0, -b.1) } else { b };
    let lhs = an as i128 * bd as i128;
    let rhs = bn as i128 * ad as i128;
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 1,
    }
}

/// Random sparse polynomial with the given degree and coefficient bounds.
pub fn random_polynomial<R: Rng>(
    rng: &mut R,
    max_deg: u32,
    max_coeff: i64,
    max_terms: usize,
) -> Polynomial {
    loop {
        let terms = rng.gen_range(1..=max_terms);
        let p = Polynomial::from_terms((0..terms).map(|_| {
            let m1 = rng.gen_range(0..=max_deg);
            let m2 = rng.gen_range(0..=max_deg);
            let mut c = 0i64;
            while c == 0 {
                c = rng.gen_range(-max_coeff..=max_coeff);
            }
            ((m1, m2), BigInt::from(c))
        }));
        if !p.is_zero() {
            return p;
        }
    }
}

/// Random rational in `[0, 1)` with bounded denominator.
pub fn random_ratio<R: Rng>(rng: &mut R, max_den: u64) -> BigRational {
    let den = rng.gen_range(2..=max_den);
    let num = rng.gen_range(0..den);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn assert_nonzero(x: &BigRational) -> bool {
    !x.is_zero() && x.is_positive()
}
