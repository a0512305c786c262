//! Dirichlet approximation and the dyadic-height denominator selector.
//!
//! For a scale `N` and real `xi` there is always a coprime pair `(a, q)` with
//! `q <= N` and `|xi - a/q| < 1/(qN)`; among all such `q` this module returns
//! the smallest, which makes the otherwise arbitrary choice canonical and
//! reproducible. The smallest valid denominator is always a continued-
//! fraction convergent denominator (for `q_k <= q < q_{k+1}` no `q` beats
//! `||q_k xi||`), so the search walks convergents instead of scanning.
//!
//! Dyadic heights `N_j = 2^{j.m} * 2^{-j1/10}` are kept in exact
//! tenth-of-a-bit exponent form: `q <= N_j` is decided as `q^10 <= 2^e` with
//! `e = 10 (j.m) - j1`, never by evaluating `2^{0.1}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Hard ceiling for the tenth-bit exponent `10 (j.m) - j1`; beyond this the
/// big-integer tenth powers stop being cheap and the request is reported.
pub const EXPONENT_BUDGET: i64 = 2_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RationalError {
    #[error("dyadic exponent {0} exceeds budget {EXPONENT_BUDGET}")]
    ExponentBudget(i64),
}

/// Coprime `(a, q)` with the exact residual `beta = xi - a/q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalApprox {
    pub a: BigInt,
    pub q: BigInt,
    pub beta: BigRational,
}

impl RationalApprox {
    pub fn beta_f64(&self) -> f64 {
        self.beta.to_f64().unwrap_or(0.0)
    }
}

/// `N_j = 2^{j.m} 2^{-j1/10}` as the exact exponent `e = 10 (j.m) - j1` in
/// tenths of a bit, clamped below at `N_j = 1` (`e = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicHeight {
    pub j: (u64, u64),
    pub vertex: (u32, u32),
    /// `max(10 (j.m) - j1, 0)`.
    pub tenth_exponent: i64,
}

impl DyadicHeight {
    pub fn new(j: (u64, u64), vertex: (u32, u32)) -> Result<Self, RationalError> {
        let jm = j.0 as i128 * vertex.0 as i128 + j.1 as i128 * vertex.1 as i128;
        let e = 10 * jm - j.0 as i128;
        if e > EXPONENT_BUDGET as i128 {
            return Err(RationalError::ExponentBudget(e.min(i64::MAX as i128) as i64));
        }
        Ok(Self {
            j,
            vertex,
            tenth_exponent: e.max(0) as i64,
        })
    }

    /// `q <= N_j`, i.e. `q^10 <= 2^e`.
    pub fn admits_q(&self, q: &BigInt) -> bool {
        q.pow(10) <= (BigInt::one() << self.tenth_exponent as u64)
    }

    /// `x < 1/(q N_j)` for nonnegative exact `x`, i.e. `(x q)^10 2^e < 1`.
    fn residual_ok(&self, x: &BigRational, q: &BigInt) -> bool {
        let scaled = x * BigRational::from(q.clone());
        let num = scaled.numer().pow(10) << self.tenth_exponent as u64;
        num < scaled.denom().pow(10)
    }

    pub fn approx_f64(&self) -> f64 {
        2f64.powf(self.tenth_exponent as f64 / 10.0)
    }
}

/// Smallest-`q` Dirichlet approximation with integer scale `N >= 1`:
/// `q <= N`, `gcd(a, q) = 1`, `|xi - a/q| < 1/(qN)`.
pub fn dirichlet_approx(xi: &BigRational, n: u64) -> RationalApprox {
    assert!(n >= 1, "scale must be >= 1");
    let nb = BigInt::from(n);
    walk_convergents(xi, |q, residual| {
        // |beta| q N < 1
        q <= &nb
            && residual * BigRational::from_integer(q * &nb) < BigRational::one()
    })
    .expect("Dirichlet approximation always exists")
}

/// The map `(j, xi) -> q(j, xi)`: Dirichlet approximation at scale `N_j`,
/// canonicalized by the smallest-`q` rule.
pub fn q_of(
    j: (u64, u64),
    xi: &BigRational,
    vertex: (u32, u32),
) -> Result<RationalApprox, RationalError> {
    let height = DyadicHeight::new(j, vertex)?;
    Ok(q_at_height(xi, &height))
}

pub fn q_at_height(xi: &BigRational, height: &DyadicHeight) -> RationalApprox {
    walk_convergents(xi, |q, residual| {
        height.admits_q(q) && height.residual_ok(residual, q)
    })
    .expect("Dirichlet approximation always exists")
}

/// Walks the continued-fraction convergents of `xi` in order of increasing
/// denominator and returns the first accepted by `accept(q, |xi - p/q|)`.
fn walk_convergents<F>(xi: &BigRational, accept: F) -> Option<RationalApprox>
where
    F: Fn(&BigInt, &BigRational) -> bool,
{
    use num_integer::Integer;
    let mut num = xi.numer().clone();
    let mut den = xi.denom().clone();
    // p_k = a_k p_{k-1} + p_{k-2}, seeded with (p_{-1}, p_{-2}) = (1, 0)
    // and (q_{-1}, q_{-2}) = (0, 1).
    let (mut p_km1, mut p_km2) = (BigInt::one(), BigInt::zero());
    let (mut q_km1, mut q_km2) = (BigInt::zero(), BigInt::one());
    loop {
        let (quot, rem) = num.div_mod_floor(&den);
        let p_k = &quot * &p_km1 + &p_km2;
        let q_k = &quot * &q_km1 + &q_km2;
        p_km2 = std::mem::replace(&mut p_km1, p_k);
        q_km2 = std::mem::replace(&mut q_km1, q_k);
        let residual = xi - BigRational::new(p_km1.clone(), q_km1.clone());
        if accept(&q_km1, &residual.abs()) {
            return Some(RationalApprox {
                a: p_km1,
                q: q_km1,
                beta: residual,
            });
        }
        if rem.is_zero() {
            return None; // exact expansion exhausted without acceptance
        }
        num = std::mem::replace(&mut den, rem);
    }
}

/// Simultaneous approximation for the full graph case: `q` is chosen by the
/// `xi3` phase, the linear frequencies take nearest integers `a_i` to
/// `q xi_i` (ties toward even).
#[derive(Debug, Clone, PartialEq)]
pub struct SimultaneousApprox {
    pub q: BigInt,
    pub a: [BigInt; 3],
    pub beta: [BigRational; 3],
    /// Set when a linear residual sits exactly on the half-integer boundary.
    pub boundary: bool,
}

pub fn simultaneous_approx(
    xi: &[BigRational; 3],
    j: (u64, u64),
    vertex: (u32, u32),
) -> Result<SimultaneousApprox, RationalError> {
    let r3 = q_of(j, &xi[2], vertex)?;
    let q = r3.q.clone();
    let qr = BigRational::from_integer(q.clone());
    let mut a = [BigInt::zero(), BigInt::zero(), r3.a.clone()];
    let mut beta = [BigRational::zero(), BigRational::zero(), r3.beta.clone()];
    let mut boundary = false;
    for i in 0..2 {
        let scaled = &xi[i] * &qr;
        let ai = round_half_even(&scaled);
        let b = &xi[i] - BigRational::new(ai.clone(), q.clone());
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        if (&b * &qr).abs() == half {
            boundary = true;
        }
        a[i] = ai;
        beta[i] = b;
    }
    Ok(SimultaneousApprox {
        q,
        a,
        beta,
        boundary,
    })
}

fn round_half_even(x: &BigRational) -> BigInt {
    use num_integer::Integer;
    let floor = x.floor().to_integer();
    let frac = x - BigRational::from_integer(floor.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if frac > half {
        floor + 1
    } else if frac < half {
        floor
    } else if floor.is_even() {
        floor
    } else {
        floor + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Exhaustive smallest-q oracle over q = 1..=N.
    fn brute_force(xi: &BigRational, n: u64) -> (BigInt, BigInt) {
        for q in 1..=n {
            let qb = BigInt::from(q);
            let a = round_half_even(&(xi * BigRational::from(qb.clone())));
            let err = (xi - BigRational::new(a.clone(), qb.clone())).abs();
            if err * BigRational::from(BigInt::from(q) * BigInt::from(n)) < BigRational::one() {
                return (a, qb);
            }
        }
        panic!("Dirichlet guarantee violated");
    }

    #[test]
    fn textbook_examples() {
        let r = dirichlet_approx(&ratio(3, 10), 7);
        assert_eq!((r.a, r.q), (BigInt::one(), BigInt::from(3)));
        assert_eq!(r.beta, ratio(3, 10) - ratio(1, 3));

        let r = dirichlet_approx(&BigRational::zero(), 100);
        assert_eq!((r.a, r.q), (BigInt::zero(), BigInt::one()));
        assert!(r.beta.is_zero());

        let r = dirichlet_approx(&ratio(1, 3), 1 << 48);
        assert_eq!((r.a, r.q), (BigInt::one(), BigInt::from(3)));
        assert!(r.beta.is_zero());
    }

    #[test]
    fn q_of_examples() {
        // xi = 1/3, vertex (2,1), j = (20,10): N_j = 2^48
        let r = q_of((20, 10), &ratio(1, 3), (2, 1)).unwrap();
        assert_eq!(r.q, BigInt::from(3));
        assert!(r.beta.is_zero());

        // xi = 0 -> q = 1 for all j
        for j in [(0, 0), (5, 3), (40, 40)] {
            let r = q_of(j, &BigRational::zero(), (1, 1)).unwrap();
            assert_eq!(r.q, BigInt::one());
        }

        // xi = 1/2 + 2^-60, vertex (1,1), j = (30,30): N_j = 2^57
        let xi = ratio(1, 2) + BigRational::new(BigInt::one(), BigInt::one() << 60u32);
        let r = q_of((30, 30), &xi, (1, 1)).unwrap();
        assert_eq!(r.q, BigInt::from(2));
        assert_eq!(r.beta, BigRational::new(BigInt::one(), BigInt::one() << 60u32));
    }

    #[test]
    fn tiny_height_clamps_to_one() {
        // j = (5,0) with vertex (0,3): j.m = 0, raw exponent negative
        let h = DyadicHeight::new((5, 0), (0, 3)).unwrap();
        assert_eq!(h.tenth_exponent, 0);
        let r = q_at_height(&ratio(2, 5), &h);
        assert_eq!(r.q, BigInt::one());
        assert_eq!(r.a, BigInt::zero());
    }

    #[test]
    fn exponent_budget_reported() {
        let err = DyadicHeight::new((u64::MAX / 4, 1), (4, 4)).unwrap_err();
        assert!(matches!(err, RationalError::ExponentBudget(_)));
    }

    #[test]
    fn contract_and_minimality_vs_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let num = rng.gen_range(0u64..1_000_000);
            let xi = BigRational::new(BigInt::from(num), BigInt::from(1_000_000u64));
            let n = rng.gen_range(1u64..2_000);
            let r = dirichlet_approx(&xi, n);
            // contract
            assert!(r.q >= BigInt::one() && r.q <= BigInt::from(n));
            assert!(r.a.gcd(&r.q).is_one() || (r.a.is_zero() && r.q.is_one()));
            let bound = BigRational::new(BigInt::one(), &r.q * BigInt::from(n));
            assert!(r.beta.abs() < bound);
            // minimality
            let (_, bq) = brute_force(&xi, n);
            assert_eq!(r.q, bq, "xi={xi} n={n}");
        }
    }

    #[test]
    fn rational_fixed_points() {
        for (a, q) in [(1i64, 3i64), (2, 7), (5, 8), (-3, 11)] {
            let xi = ratio(a, q);
            let r = dirichlet_approx(&xi, 10_000);
            assert_eq!(r.q, BigInt::from(q));
            assert_eq!(r.a, BigInt::from(a));
            assert!(r.beta.is_zero());
        }
    }

    #[test]
    fn simultaneous_examples() {
        let xi = [BigRational::zero(), BigRational::zero(), ratio(1, 3)];
        let s = simultaneous_approx(&xi, (20, 10), (2, 1)).unwrap();
        assert_eq!(s.q, BigInt::from(3));
        assert_eq!(s.a, [BigInt::zero(), BigInt::zero(), BigInt::one()]);
        assert!(s.beta.iter().all(|b| b.is_zero()));
        assert!(!s.boundary);

        let xi = [ratio(2, 5), BigRational::zero(), BigRational::zero()];
        let s = simultaneous_approx(&xi, (4, 2), (1, 1)).unwrap();
        assert_eq!(s.q, BigInt::one());
        assert_eq!(s.a[0], BigInt::zero());
        assert_eq!(s.beta[0], ratio(2, 5));

        let xi = [ratio(1, 2), BigRational::zero(), BigRational::zero()];
        let s = simultaneous_approx(&xi, (4, 2), (1, 1)).unwrap();
        assert_eq!(s.a[0], BigInt::zero(), "ties round toward even");
        assert_eq!(s.beta[0], ratio(1, 2));
        assert!(s.boundary);
    }

    #[test]
    fn determinism() {
        let xi = ratio(355, 1130) + BigRational::new(BigInt::one(), BigInt::one() << 90u32);
        let a = q_of((25, 13), &xi, (3, 2)).unwrap();
        let b = q_of((25, 13), &xi, (3, 2)).unwrap();
        assert_eq!(a, b);
    }
}
